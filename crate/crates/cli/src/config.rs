use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use milseq::experiment::ThresholdProtocol;
use milseq::objectives::{AveragingConvention, ObjectiveKind, ObjectiveSpec};
use milseq::seqnets::{Head, ModelConfig};
use milseq::synthgen::{LabelLevel, SynthConfig};
use milseq::trainer::TrainConfig;

/// Which epoch's parameters `train` keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Highest validation F1 after tuning thresholds.
    TunedF1,
    ValidLoss,
    Last,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Dataset directory; defaults to `<out>/data`.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Generator settings for `gen-data`. Its seed is derived from the
    /// experiment seed.
    #[serde(default)]
    pub synth: Option<SynthConfig>,
    /// Label level `gen-data` writes.
    #[serde(default = "strong")]
    pub labels: LabelLevel,
}

fn strong() -> LabelLevel {
    LabelLevel::Strong
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            path: None,
            synth: None,
            labels: LabelLevel::Strong,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub objective: ObjectiveKind,
    /// Loss normalization; defaults to the objective's usual one.
    #[serde(default)]
    pub convention: Option<AveragingConvention>,
    #[serde(default)]
    pub thresholds: ThresholdProtocol,
    /// Defaults to `tuned-f1` for presence/absence objectives and
    /// `valid-loss` for CTC.
    #[serde(default)]
    pub selection: Option<Selection>,
    #[serde(default)]
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

/// Purposes that get their own seed.
#[derive(Clone, Copy)]
pub enum Stream {
    Data = 1,
    Init = 2,
    Train = 3,
    Tune = 4,
}

/// Mixes the experiment seed with a purpose tag (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: Stream) -> u64 {
    let mut z = seed ^ (stream as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(cfg)
    }

    /// Applies command-line overrides and pushes the derived seeds down.
    pub fn resolve(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if out.is_some() {
            self.out = out;
        }
        if self.out.is_none() {
            bail!("no output directory: pass --out or set `out` in the config");
        }
        if let Some(synth) = self.data.synth.as_mut() {
            synth.seed = derive_seed(self.seed, Stream::Data);
        }
        self.train.seed = derive_seed(self.seed, Stream::Train);
        let expected = match self.objective {
            ObjectiveKind::Ctc => Head::Softmax,
            _ => Head::Sigmoid,
        };
        if self.model.head != expected {
            bail!("objective {:?} needs a {:?} output layer", self.objective, expected);
        }
        self.model.validate()?;
        self.train.validate()?;
        Ok(self)
    }

    pub fn out_dir(&self) -> &Path {
        self.out.as_deref().expect("resolved config has an output directory")
    }

    pub fn data_dir(&self) -> PathBuf {
        self.data.path.clone().unwrap_or_else(|| self.out_dir().join("data"))
    }

    pub fn objective_spec(&self) -> ObjectiveSpec {
        ObjectiveSpec {
            kind: self.objective,
            convention: self.convention.unwrap_or(self.objective.default_convention()),
        }
    }

    pub fn selection(&self) -> Selection {
        self.selection.unwrap_or(match self.objective {
            ObjectiveKind::Ctc => Selection::ValidLoss,
            _ => Selection::TunedF1,
        })
    }

    pub fn seed_for(&self, stream: Stream) -> u64 {
        derive_seed(self.seed, stream)
    }
}
