//! Minibatch SGD with Nesterov momentum, element-wise gradient clipping and
//! two learning-rate schedules.
//!
//! Each batch gradient is the mean of per-bag gradients. Per-bag forward and
//! backward passes run in parallel; their results are reduced in bag order so
//! a run is bit-identical for a given seed regardless of thread count.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{ObjectiveKind, ObjectiveSpec, Target};
use crate::scalar::Scalar;
use crate::seqnets::{Dropout, Model};
use crate::synthgen::{Bag, Dataset};
use crate::tensor::{Gradients, ParamSet, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Schedule {
    /// Constant for `warm_epochs`, then halved after every epoch for
    /// `halving_epochs` more.
    ConstantThenHalving { warm_epochs: usize, halving_epochs: usize },
    /// Multiplied by `factor` once the monitored loss has not improved for
    /// `patience` consecutive epochs.
    Plateau { factor: f64, patience: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "unit", content = "count")]
pub enum BatchUnit {
    /// Whole bags are packed until the batch holds at least this many frames.
    Frames(usize),
    Recordings(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    /// Absolute per-element gradient bound.
    #[serde(default)]
    pub clip: Option<f64>,
    pub schedule: Schedule,
    pub batch: BatchUnit,
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_momentum() -> f64 {
    0.9
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be finite and non-negative", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} outside [0, 1)", self.momentum));
        }
        if let Some(c) = self.clip {
            if !(c > 0.0) {
                return bad(format!("clip limit {} must be positive", c));
            }
        }
        match self.schedule {
            Schedule::Plateau { factor, patience } => {
                if patience == 0 || !(factor > 0.0 && factor <= 1.0) {
                    return bad("plateau schedule needs patience >= 1 and factor in (0, 1]".into());
                }
            }
            Schedule::ConstantThenHalving { warm_epochs, halving_epochs } => {
                if self.epochs > warm_epochs + halving_epochs {
                    return bad(format!(
                        "{} epochs exceed {} constant + {} halving epochs",
                        self.epochs, warm_epochs, halving_epochs
                    ));
                }
            }
        }
        match self.batch {
            BatchUnit::Frames(0) | BatchUnit::Recordings(0) => bad("batch size must be positive".into()),
            _ => Ok(()),
        }
    }
}

/// Mutable optimizer state carried across epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState<T> {
    /// 1-based index of the current epoch.
    pub epoch: usize,
    pub learning_rate: f64,
    pub velocity: ParamSet<T>,
    pub best_loss: Option<f64>,
    pub since_improvement: usize,
    pub clip_count: usize,
    pub clamp_count: usize,
}

impl<T: Scalar> TrainState<T> {
    pub fn new(params: &ParamSet<T>, learning_rate: f64) -> Self {
        Self {
            epoch: 1,
            learning_rate,
            velocity: params.zeros_like(),
            best_loss: None,
            since_improvement: 0,
            clip_count: 0,
            clamp_count: 0,
        }
    }
}

/// Clamps every element to `[-limit, limit]`; returns how many changed.
pub fn clip_gradients<T: Scalar>(grads: &mut Gradients<T>, limit: f64) -> usize {
    let (lo, hi) = (T::lit(-limit), T::lit(limit));
    let mut count = 0;
    for (_, g) in grads.iter_mut() {
        for v in g.data_mut() {
            if *v > hi {
                *v = hi;
                count += 1;
            } else if *v < lo {
                *v = lo;
                count += 1;
            }
        }
    }
    count
}

/// The point `params + momentum * velocity` at which the gradient for the
/// next step is taken.
pub fn lookahead<T: Scalar>(params: &ParamSet<T>, velocity: &ParamSet<T>, momentum: f64) -> ParamSet<T> {
    let mut ahead = params.clone();
    ahead.add_scaled(velocity, T::lit(momentum));
    ahead
}

/// `v' = momentum * v - lr * g`, `params' = params + v'`, where `g` was
/// evaluated at [`lookahead`]. Nothing is modified if `g` is not finite.
pub fn sgd_nesterov_step<T: Scalar>(
    params: &mut ParamSet<T>,
    velocity: &mut ParamSet<T>,
    grads: &Gradients<T>,
    lr: f64,
    momentum: f64,
) -> Result<()> {
    for (name, g) in grads.iter() {
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient(name.clone()));
        }
        match (params.get(name), velocity.get(name)) {
            (Some(p), Some(v)) if p.shape() == g.shape() && v.shape() == g.shape() => {}
            _ => return Err(Error::shape("sgd_nesterov_step", format!("gradient `{}` does not match", name))),
        }
    }
    if grads.len() != params.len() {
        return Err(Error::shape("sgd_nesterov_step", "gradient set does not cover the parameters"));
    }
    velocity.scale(T::lit(momentum));
    velocity.add_scaled(grads, T::lit(-lr));
    params.add_scaled(velocity, T::one());
    Ok(())
}

/// Learning rate for 1-based `epoch` under constant-then-halving.
pub fn halving_rate(initial: f64, warm_epochs: usize, epoch: usize) -> f64 {
    initial * 0.5f64.powi(epoch.saturating_sub(warm_epochs) as i32)
}

/// Records the monitored loss of the epoch just finished and sets the rate
/// for `state.epoch`, which the caller has already advanced.
pub fn schedule_update<T>(state: &mut TrainState<T>, schedule: &Schedule, initial: f64, loss: f64) -> f64 {
    match *schedule {
        Schedule::ConstantThenHalving { warm_epochs, .. } => {
            state.learning_rate = halving_rate(initial, warm_epochs, state.epoch);
        }
        Schedule::Plateau { factor, patience } => {
            if state.best_loss.map_or(true, |b| loss < b) {
                state.best_loss = Some(loss);
                state.since_improvement = 0;
            } else {
                state.since_improvement += 1;
                if state.since_improvement >= patience {
                    state.learning_rate *= factor;
                    state.since_improvement = 0;
                }
            }
        }
    }
    state.learning_rate
}

/// Splits shuffled bag indices into batches.
pub fn make_batches<T: Scalar>(order: &[usize], bags: &[Bag<T>], unit: BatchUnit) -> Vec<Vec<usize>> {
    match unit {
        BatchUnit::Recordings(n) => order.chunks(n).map(<[usize]>::to_vec).collect(),
        BatchUnit::Frames(budget) => {
            let mut out = Vec::new();
            let mut current = Vec::new();
            let mut frames = 0;
            for &i in order {
                current.push(i);
                frames += bags[i].frames();
                if frames >= budget {
                    out.push(std::mem::take(&mut current));
                    frames = 0;
                }
            }
            if !current.is_empty() {
                out.push(current);
            }
            out
        }
    }
}

fn target<'a, T>(bag: &'a Bag<T>, kind: ObjectiveKind) -> Result<Target<'a>> {
    match kind {
        ObjectiveKind::Ctc => bag
            .sequence
            .as_ref()
            .map(|s| Target::Sequence(s.as_slice()))
            .ok_or(Error::MissingLabels("sequential")),
        ObjectiveKind::Max | ObjectiveKind::NoisyOr => Ok(Target::Weak(&bag.weak)),
    }
}

/// Loss and clamp count of one bag, plus its gradient when requested.
pub fn bag_loss<T: Scalar>(
    model: &Model<T>,
    bag: &Bag<T>,
    objective: ObjectiveSpec,
    dropout: Dropout,
    with_grad: bool,
) -> Result<(f64, usize, Option<Gradients<T>>)> {
    let tape = Tape::new();
    let bound = tape.bind(&model.params);
    let logits = model.logits(&tape, &bound, &bag.features, dropout)?;
    let rec = objective.recorded_loss(logits, target(bag, objective.kind)?)?;
    let loss = rec.loss.value().item()?.as_f64();
    let grads = if with_grad { Some(tape.backward(rec.loss)?) } else { None };
    Ok((loss, rec.clamped, grads))
}

/// Mean loss over `bags` with dropout off; `None` for an empty split.
pub fn mean_loss<T: Scalar>(model: &Model<T>, bags: &[Bag<T>], objective: ObjectiveSpec) -> Result<Option<f64>> {
    if bags.is_empty() {
        return Ok(None);
    }
    let losses: Result<Vec<f64>> = bags
        .par_iter()
        .map(|b| bag_loss(model, b, objective, Dropout::Off, false).map(|r| r.0))
        .collect();
    Ok(Some(losses?.iter().sum::<f64>() / bags.len() as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Rate used during this epoch.
    pub learning_rate: f64,
    pub train_loss: f64,
    pub valid_loss: Option<f64>,
    pub clip_count: usize,
    pub clamp_count: usize,
}

pub fn write_epoch_csv<W: Write>(mut out: W, log: &[EpochRecord]) -> Result<()> {
    writeln!(out, "epoch,lr,train_loss,valid_loss,clip_count,clamp_count")?;
    for r in log {
        let valid = r.valid_loss.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.epoch, r.learning_rate, r.train_loss, valid, r.clip_count, r.clamp_count
        )?;
    }
    Ok(())
}

pub struct TrainOutcome<T> {
    /// Parameters after the last epoch.
    pub model: Model<T>,
    /// Parameters after the highest-scoring epoch with its 1-based index,
    /// when any epoch was scored.
    pub best: Option<(usize, Model<T>)>,
    /// Selection score of every epoch (`None` where unscored).
    pub scores: Vec<Option<f64>>,
    pub log: Vec<EpochRecord>,
    pub state: TrainState<T>,
}

/// Checks that every training and validation bag carries the labels the
/// objective needs.
pub fn check_labels<T>(data: &Dataset<T>, kind: ObjectiveKind) -> Result<()> {
    if kind == ObjectiveKind::Ctc && data.train.iter().chain(&data.valid).any(|b| b.sequence.is_none()) {
        return Err(Error::MissingLabels("sequential"));
    }
    Ok(())
}

/// Trains `model` on `data.train`, monitoring `data.valid`. The kept
/// model is the one with the lowest validation loss.
pub fn train<T: Scalar>(
    model: Model<T>,
    data: &Dataset<T>,
    objective: ObjectiveSpec,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    train_with(model, data, objective, cfg, |_, _, valid_loss| Ok(valid_loss.map(|l| -l)))
}

/// Like [`train`], but after each epoch `score(epoch, model, valid_loss)`
/// rates the current parameters; the highest score (earliest on ties) is
/// kept as the best model.
pub fn train_with<T, F>(
    mut model: Model<T>,
    data: &Dataset<T>,
    objective: ObjectiveSpec,
    cfg: &TrainConfig,
    mut score: F,
) -> Result<TrainOutcome<T>>
where
    T: Scalar,
    F: FnMut(usize, &Model<T>, Option<f64>) -> Result<Option<f64>>,
{
    cfg.validate()?;
    if data.train.is_empty() {
        return Err(Error::InvalidConfig("training split is empty".into()));
    }
    check_labels(data, objective.kind)?;

    let mut state = TrainState::new(&model.params, cfg.learning_rate);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, Model<T>)> = None;
    let mut scores = Vec::with_capacity(cfg.epochs);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.train.len()).collect();

    for epoch in 1..=cfg.epochs {
        state.epoch = epoch;
        let lr = state.learning_rate;
        order.shuffle(&mut rng);
        let batches = make_batches(&order, &data.train, cfg.batch);
        let (mut loss_sum, mut clips, mut clamps) = (0.0, 0, 0);

        for (b, batch) in batches.iter().enumerate() {
            let seeds: Vec<u64> = batch.iter().map(|_| rng.gen()).collect();
            let ahead = Model {
                config: model.config.clone(),
                params: lookahead(&model.params, &state.velocity, cfg.momentum),
            };
            let results: Result<Vec<_>> = batch
                .par_iter()
                .zip(&seeds)
                .map(|(&i, &seed)| bag_loss(&ahead, &data.train[i], objective, Dropout::On { seed }, true))
                .collect();
            let results = results.map_err(|e| match e {
                Error::NonFinite { .. } => Error::Diverged { epoch, batch: b },
                e => e,
            })?;

            let mut grads = model.params.zeros_like();
            let mut batch_loss = 0.0;
            for (loss, clamped, g) in &results {
                batch_loss += loss;
                clamps += clamped;
                grads.add_scaled(g.as_ref().expect("gradient requested"), T::one());
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged { epoch, batch: b });
            }
            loss_sum += batch_loss;
            grads.scale(T::lit(1.0 / batch.len() as f64));
            if let Some(limit) = cfg.clip {
                clips += clip_gradients(&mut grads, limit);
            }
            sgd_nesterov_step(&mut model.params, &mut state.velocity, &grads, lr, cfg.momentum).map_err(|e| match e {
                Error::NonFiniteGradient(_) => Error::Diverged { epoch, batch: b },
                e => e,
            })?;
        }

        let train_loss = loss_sum / data.train.len() as f64;
        let valid_loss = mean_loss(&model, &data.valid, objective)?;
        if let Some(v) = valid_loss {
            if !v.is_finite() {
                return Err(Error::Diverged { epoch, batch: batches.len() });
            }
        }
        let s = score(epoch, &model, valid_loss)?;
        if let Some(s) = s {
            if best.as_ref().map_or(true, |(_, b, _)| s > *b) {
                best = Some((epoch, s, model.clone()));
            }
        }
        scores.push(s);
        state.clip_count += clips;
        state.clamp_count += clamps;
        log.push(EpochRecord {
            epoch,
            learning_rate: lr,
            train_loss,
            valid_loss,
            clip_count: clips,
            clamp_count: clamps,
        });
        state.epoch = epoch + 1;
        schedule_update(&mut state, &cfg.schedule, cfg.learning_rate, valid_loss.unwrap_or(train_loss));
    }

    Ok(TrainOutcome {
        model,
        best: best.map(|(e, _, m)| (e, m)),
        scores,
        log,
        state,
    })
}
