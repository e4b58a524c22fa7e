//! Command-line harness: data generation, training, decoding, scoring,
//! threshold tuning and frame dumps.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "milseq", version, about = "Weakly supervised sequence learning with MIL pooling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset into the data directory.
    GenData {
        #[command(flatten)]
        common: Common,
        /// Store presence/absence labels only.
        #[arg(long)]
        weak_only: bool,
    },
    /// Train a model; writes model.params, last.params and epochs.csv.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Tune class thresholds on the validation split; writes thresholds.tsv.
    TuneThresholds {
        #[command(flatten)]
        common: Common,
    },
    /// Decode a split to token sequences (CTC) or event intervals.
    Decode {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Score the trained model; writes metrics.csv.
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
    /// Write per-frame probabilities as frame_time,class,probability CSV.
    DumpFrames {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "test")]
        split: String,
        /// Only this recording; all recordings of the split by default.
        #[arg(long)]
        recording: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData { common, weak_only } => commands::gen_data(&common, weak_only),
        Command::Train { common } => commands::train(&common),
        Command::TuneThresholds { common } => commands::tune(&common),
        Command::Decode { common, split } => commands::decode(&common, &split),
        Command::Evaluate { common } => commands::evaluate(&common),
        Command::DumpFrames { common, split, recording } => commands::dump_frames(&common, &split, recording.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::FAILURE
        }
    }
}
