use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use milseq::decoder::{best_path_decode_weak, write_intervals_tsv};
use milseq::evaluation::{per_corpus, write_metrics_csv, ThresholdVector};
use milseq::experiment::{
    decode_ctc, detect, evaluate_ctc, evaluate_weak_with, predict_split, tune_on_valid, tuned_f1_selector,
};
use milseq::objectives::ObjectiveKind;
use milseq::seqnets::{FramePredictions, Model};
use milseq::synthgen::{generate, read_dataset, write_dataset, Bag, Dataset, LabelLevel};
use milseq::tensor::checkpoint;
use milseq::trainer::{train_with, write_epoch_csv};

use crate::config::{ExperimentConfig, Selection, Stream};
use crate::Common;

const MODEL_FILE: &str = "model.params";
const LAST_FILE: &str = "last.params";
const EPOCHS_FILE: &str = "epochs.csv";
const THRESHOLDS_FILE: &str = "thresholds.tsv";
const METRICS_FILE: &str = "metrics.csv";

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    ExperimentConfig::load(&common.config)?.resolve(common.seed, common.out.clone())
}

fn load_data(cfg: &ExperimentConfig) -> Result<Dataset> {
    let dir = cfg.data_dir();
    let data: Dataset =
        read_dataset(&dir).with_context(|| format!("loading dataset from {} (run gen-data first?)", dir.display()))?;
    if data.feature_dim != cfg.model.input_dim || data.classes() != cfg.model.classes {
        bail!(
            "dataset has {} features and {} classes but the model expects {} and {}",
            data.feature_dim,
            data.classes(),
            cfg.model.input_dim,
            cfg.model.classes
        );
    }
    Ok(data)
}

fn load_model(cfg: &ExperimentConfig) -> Result<Model<f64>> {
    let path = cfg.out_dir().join(MODEL_FILE);
    let params = checkpoint::load(&path).with_context(|| format!("loading {} (run train first?)", path.display()))?;
    Ok(Model::from_params(cfg.model.clone(), params)?)
}

fn split<'a>(data: &'a Dataset, name: &str) -> Result<&'a [Bag]> {
    data.split(name)
        .with_context(|| format!("unknown split `{}` (expected train, valid or test)", name))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn weak_pooling(cfg: &ExperimentConfig) -> Result<milseq::objectives::Pooling> {
    cfg.objective
        .pooling()
        .with_context(|| "thresholds apply to presence/absence objectives only")
}

/// Thresholds from `thresholds.tsv`, or freshly tuned on the validation split.
fn thresholds(cfg: &ExperimentConfig, data: &Dataset, model: &Model<f64>) -> Result<(ThresholdVector, Option<f64>)> {
    let path = cfg.out_dir().join(THRESHOLDS_FILE);
    if path.exists() {
        let text = fs::read_to_string(&path)?;
        return Ok((ThresholdVector::read_tsv(&text, &data.class_names)?, None));
    }
    let preds = predict_split(model, &data.valid)?;
    let (t, f1) = tune_on_valid(&preds, &data.valid, weak_pooling(cfg)?, cfg.thresholds, cfg.seed_for(Stream::Tune))?;
    Ok((t, Some(f1)))
}

pub fn gen_data(common: &Common, weak_only: bool) -> Result<()> {
    let cfg = load_config(common)?;
    let synth = cfg.data.synth.as_ref().context("config has no [data.synth] section")?;
    let data = generate(synth)?;
    let level = if weak_only { LabelLevel::Weak } else { cfg.data.labels };
    write_dataset(&data, &cfg.data_dir(), level)?;
    Ok(())
}

pub fn train(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let data = load_data(&cfg)?;
    let model = Model::init(cfg.model.clone(), cfg.seed_for(Stream::Init))?;
    let objective = cfg.objective_spec();
    let selection = cfg.selection();
    let outcome = match selection {
        Selection::TunedF1 => {
            let pooling = objective
                .kind
                .pooling()
                .context("tuned-f1 selection needs a presence/absence objective")?;
            let select = tuned_f1_selector(&data.valid, pooling, cfg.thresholds, cfg.seed_for(Stream::Tune));
            train_with(model, &data, objective, &cfg.train, select)?
        }
        Selection::ValidLoss => train_with(model, &data, objective, &cfg.train, |_, _, l| Ok(l.map(|l| -l)))?,
        Selection::Last => train_with(model, &data, objective, &cfg.train, |_, _, _| Ok(None))?,
    };
    let out = cfg.out_dir();
    fs::create_dir_all(out)?;
    let chosen = outcome.best.as_ref().map(|(_, m)| m).unwrap_or(&outcome.model);
    checkpoint::save(&chosen.params, &out.join(MODEL_FILE))?;
    checkpoint::save(&outcome.model.params, &out.join(LAST_FILE))?;
    let mut w = create(&out.join(EPOCHS_FILE))?;
    write_epoch_csv(&mut w, &outcome.log)?;
    w.flush()?;
    // A stale threshold file would belong to the previous model.
    let stale = out.join(THRESHOLDS_FILE);
    if stale.exists() {
        fs::remove_file(stale)?;
    }
    Ok(())
}

pub fn tune(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let data = load_data(&cfg)?;
    let model = load_model(&cfg)?;
    let preds = predict_split(&model, &data.valid)?;
    let (t, _) = tune_on_valid(&preds, &data.valid, weak_pooling(&cfg)?, cfg.thresholds, cfg.seed_for(Stream::Tune))?;
    let mut w = create(&cfg.out_dir().join(THRESHOLDS_FILE))?;
    t.write_tsv(&mut w, &data.class_names)?;
    w.flush()?;
    Ok(())
}

pub fn decode(common: &Common, split_name: &str) -> Result<()> {
    let cfg = load_config(common)?;
    let data = load_data(&cfg)?;
    let model = load_model(&cfg)?;
    let bags = split(&data, split_name)?;
    let preds = predict_split(&model, bags)?;
    let mut w = create(&cfg.out_dir().join("decoded").join(format!("{}.tsv", split_name)))?;
    if cfg.objective == ObjectiveKind::Ctc {
        for (bag, seq) in bags.iter().zip(decode_ctc(&preds)) {
            let names: Vec<&str> = seq.0.iter().map(|&c| data.class_names[c].as_str()).collect();
            writeln!(w, "{}\t{}", bag.id, names.join(" "))?;
        }
    } else {
        let (t, _) = thresholds(&cfg, &data, &model)?;
        let rows: Vec<_> = bags
            .iter()
            .zip(detect(&preds, &t)?)
            .flat_map(|(b, ivs)| ivs.into_iter().map(move |iv| (b.id.clone(), iv)))
            .collect();
        write_intervals_tsv(&mut w, &rows, &data.class_names)?;
    }
    w.flush()?;
    Ok(())
}

pub fn evaluate(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let data = load_data(&cfg)?;
    let model = load_model(&cfg)?;
    let mut rows = Vec::new();
    if cfg.objective == ObjectiveKind::Ctc {
        for name in ["valid", "test"] {
            let bags = split(&data, name)?;
            if !bags.is_empty() {
                rows.push(("per".to_string(), name.to_string(), evaluate_ctc(&model, bags)?));
            }
        }
    } else {
        let pooling = weak_pooling(&cfg)?;
        let (t, tuned) = thresholds(&cfg, &data, &model)?;
        let preds = predict_split(&model, &data.test)?;
        let report = evaluate_weak_with(&preds, &data.test, pooling, t, tuned.unwrap_or(f64::NAN), cfg.seed_for(Stream::Tune))?;
        rows.extend(report.rows().into_iter().filter(|r| r.2.is_finite() || r.0 != "tuning_f1"));
        if data.test.iter().all(|b| b.sequence.is_some()) && !data.test.is_empty() {
            let pairs: Vec<_> = data
                .test
                .iter()
                .zip(&preds)
                .map(|(b, p)| (b.sequence.clone().unwrap(), best_path_decode_weak(&p.values)))
                .collect();
            rows.push(("per".to_string(), "test".to_string(), per_corpus(&pairs)?));
        }
    }
    let mut w = create(&cfg.out_dir().join(METRICS_FILE))?;
    write_metrics_csv(&mut w, &rows)?;
    w.flush()?;
    Ok(())
}

fn write_frames(path: &Path, preds: &FramePredictions<f64>, names: &[String]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "frame_time,class,probability")?;
    for t in 0..preds.frames() {
        let time = t as f64 / preds.frame_rate;
        for (c, name) in names.iter().enumerate().take(preds.width()) {
            writeln!(w, "{},{},{}", time, name, preds.values.get(t, c))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn dump_frames(common: &Common, split_name: &str, recording: Option<&str>) -> Result<()> {
    let cfg = load_config(common)?;
    let data = load_data(&cfg)?;
    let model = load_model(&cfg)?;
    let bags = split(&data, split_name)?;
    let selected: Vec<&Bag> = match recording {
        Some(id) => vec![bags
            .iter()
            .find(|b| b.id == id)
            .with_context(|| format!("no recording `{}` in split {}", id, split_name))?],
        None => bags.iter().collect(),
    };
    let mut names = data.class_names.clone();
    if cfg.objective == ObjectiveKind::Ctc {
        names.push("<blank>".to_string());
    }
    let dir = cfg.out_dir().join("frames");
    for bag in selected {
        let preds = model.predict(&bag.features, bag.frame_rate)?;
        write_frames(&dir.join(format!("{}.csv", bag.id)), &preds, &names)?;
    }
    Ok(())
}
