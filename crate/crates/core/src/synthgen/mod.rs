//! Synthetic weakly labelled sequences with known event timing.
//!
//! Every class owns a fixed signature direction in feature space; the
//! signatures are orthonormal and scaled by `amplitude`. An event paints its
//! class signature onto each frame it covers, overlapping events add up, and
//! Gaussian noise is added everywhere. Frames without events are noise
//! around the zero vector.
//!
//! Strong labels are kept for evaluation; the presence/absence and
//! sequential labels are always derived from them.

mod store;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{EventInterval, TokenSequence};
use crate::error::{Error, Result};
use crate::objectives::WeakLabel;
use crate::scalar::Scalar;
use crate::tensor::DenseArray;

pub use store::{read_dataset, write_dataset, LabelLevel};

/// Attempts at placing a bag's events without overlap before giving up.
const PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub classes: usize,
    pub feature_dim: usize,
    /// Frames per bag.
    pub frames: usize,
    /// Frames per second.
    pub frame_rate: f64,
    pub bags: SplitSizes,
    /// Inclusive range of event lengths in frames.
    pub event_frames: (usize, usize),
    /// Inclusive range of events per bag.
    pub events_per_bag: (usize, usize),
    pub noise_std: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub allow_overlap: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_amplitude() -> f64 {
    1.0
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.classes < 2 {
            return bad("at least two classes are required".into());
        }
        if self.feature_dim < self.classes {
            return bad(format!(
                "feature_dim {} cannot hold {} orthogonal class signatures",
                self.feature_dim, self.classes
            ));
        }
        let (dmin, dmax) = self.event_frames;
        if dmin == 0 || dmin > dmax || dmax > self.frames {
            return bad(format!("event length range {:?} not within [1, {}]", self.event_frames, self.frames));
        }
        if self.events_per_bag.0 > self.events_per_bag.1 {
            return bad(format!("events per bag range {:?} is empty", self.events_per_bag));
        }
        if !(self.noise_std >= 0.0) || !(self.frame_rate > 0.0) {
            return bad("noise_std must be >= 0 and frame_rate > 0".into());
        }
        if !self.allow_overlap && self.events_per_bag.1 * dmin > self.frames {
            return Err(Error::Infeasible(format!(
                "{} events of at least {} frames cannot fit in {} frames without overlap",
                self.events_per_bag.1, dmin, self.frames
            )));
        }
        Ok(())
    }
}

/// One sequence with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Bag<T = f64> {
    pub id: String,
    /// `frames x features`.
    pub features: DenseArray<T>,
    pub frame_rate: f64,
    /// Timed events sorted by onset, when strong labels are available.
    pub strong: Option<Vec<EventInterval>>,
    pub weak: WeakLabel,
    /// Event classes in onset order, when strong labels are available.
    pub sequence: Option<TokenSequence>,
}

impl<T: Scalar> Bag<T> {
    /// Builds a bag from timed events, deriving both weaker label levels.
    pub fn from_strong(
        id: String,
        features: DenseArray<T>,
        frame_rate: f64,
        mut strong: Vec<EventInterval>,
        classes: usize,
    ) -> Result<Self> {
        strong.sort_by(|a, b| a.onset.total_cmp(&b.onset).then(a.class.cmp(&b.class)));
        let weak = WeakLabel::new(strong.iter().map(|e| e.class), classes)?;
        let sequence = TokenSequence(strong.iter().map(|e| e.class).collect());
        Ok(Self {
            id,
            features,
            frame_rate,
            strong: Some(strong),
            weak,
            sequence: Some(sequence),
        })
    }

    /// A bag with an untimed label sequence; presence/absence is derived.
    pub fn from_sequence(
        id: String,
        features: DenseArray<T>,
        frame_rate: f64,
        sequence: TokenSequence,
        classes: usize,
    ) -> Result<Self> {
        let weak = WeakLabel::new(sequence.0.iter().copied(), classes)?;
        Ok(Self {
            id,
            features,
            frame_rate,
            strong: None,
            weak,
            sequence: Some(sequence),
        })
    }

    /// A bag with presence/absence labels only.
    pub fn weak_only(id: String, features: DenseArray<T>, frame_rate: f64, weak: WeakLabel) -> Self {
        Self {
            id,
            features,
            frame_rate,
            strong: None,
            weak,
            sequence: None,
        }
    }

    pub fn frames(&self) -> usize {
        self.features.rows()
    }

    pub fn duration(&self) -> f64 {
        self.frames() as f64 / self.frame_rate
    }

    pub fn cast<U: Scalar>(&self) -> Bag<U> {
        Bag {
            id: self.id.clone(),
            features: self.features.cast(),
            frame_rate: self.frame_rate,
            strong: self.strong.clone(),
            weak: self.weak.clone(),
            sequence: self.sequence.clone(),
        }
    }
}

/// Train, validation and test bags plus the class names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T = f64> {
    pub class_names: Vec<String>,
    pub feature_dim: usize,
    pub config: Option<SynthConfig>,
    pub train: Vec<Bag<T>>,
    pub valid: Vec<Bag<T>>,
    pub test: Vec<Bag<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn split(&self, name: &str) -> Option<&[Bag<T>]> {
        match name {
            "train" => Some(&self.train),
            "valid" => Some(&self.valid),
            "test" => Some(&self.test),
            _ => None,
        }
    }

    pub fn has_strong_labels(&self) -> bool {
        self.train.iter().chain(&self.valid).chain(&self.test).all(|b| b.strong.is_some())
    }

    pub fn has_sequences(&self) -> bool {
        self.train.iter().chain(&self.valid).chain(&self.test).all(|b| b.sequence.is_some())
    }

    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        let c = |v: &[Bag<T>]| v.iter().map(Bag::cast).collect();
        Dataset {
            class_names: self.class_names.clone(),
            feature_dim: self.feature_dim,
            config: self.config.clone(),
            train: c(&self.train),
            valid: c(&self.valid),
            test: c(&self.test),
        }
    }
}

pub const SPLITS: [&str; 3] = ["train", "valid", "test"];

/// Generator for one bag. Stream 0 is reserved for the class signatures;
/// every (split, index) pair gets its own stream.
fn bag_rng(seed: u64, split: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((split as u64 + 1) << 40) | index as u64);
    rng
}

/// Orthonormal class directions by Gram-Schmidt on Gaussian draws.
pub fn class_signatures(classes: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(classes);
    while out.len() < classes {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        for u in &out {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            out.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    out
}

/// Event placements as `(class, start frame, length)`.
fn place_events(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize, usize)>> {
    let count = rng.gen_range(cfg.events_per_bag.0..=cfg.events_per_bag.1);
    let classes: Vec<usize> = (0..count).map(|_| rng.gen_range(0..cfg.classes)).collect();
    let lengths: Vec<usize> = (0..count)
        .map(|_| rng.gen_range(cfg.event_frames.0..=cfg.event_frames.1))
        .collect();
    for _ in 0..PLACEMENT_ATTEMPTS {
        let starts: Vec<usize> = lengths.iter().map(|&d| rng.gen_range(0..=cfg.frames - d)).collect();
        let ok = cfg.allow_overlap
            || (0..count).all(|i| {
                (0..i).all(|j| starts[i] + lengths[i] <= starts[j] || starts[j] + lengths[j] <= starts[i])
            });
        if ok {
            return Ok(classes
                .iter()
                .zip(&starts)
                .zip(&lengths)
                .map(|((&c, &s), &d)| (c, s, d))
                .collect());
        }
    }
    Err(Error::Infeasible(format!(
        "could not place {} non-overlapping events in {} frames",
        count, cfg.frames
    )))
}

fn generate_bag(cfg: &SynthConfig, signatures: &[Vec<f64>], split: usize, index: usize) -> Result<Bag> {
    let mut rng = bag_rng(cfg.seed, split, index);
    let events = place_events(cfg, &mut rng)?;
    let (frames, f) = (cfg.frames, cfg.feature_dim);
    let mut data = vec![0.0; frames * f];
    if cfg.noise_std > 0.0 {
        let noise = Normal::new(0.0, cfg.noise_std).expect("validated noise");
        for v in data.iter_mut() {
            *v = noise.sample(&mut rng);
        }
    }
    for &(c, start, len) in &events {
        for frame in start..start + len {
            for (v, s) in data[frame * f..(frame + 1) * f].iter_mut().zip(&signatures[c]) {
                *v += cfg.amplitude * s;
            }
        }
    }
    let strong = events
        .iter()
        .map(|&(c, s, d)| EventInterval {
            class: c,
            onset: s as f64 / cfg.frame_rate,
            offset: (s + d) as f64 / cfg.frame_rate,
        })
        .collect();
    Bag::from_strong(
        format!("{}-{:05}", SPLITS[split], index),
        DenseArray::matrix(frames, f, data)?,
        cfg.frame_rate,
        strong,
        cfg.classes,
    )
}

/// Generates all three splits. Deterministic given the config, including
/// the seed; bags are generated in parallel from independent streams.
pub fn generate(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let signatures = class_signatures(cfg.classes, cfg.feature_dim, cfg.seed);
    let sizes = [cfg.bags.train, cfg.bags.valid, cfg.bags.test];
    let mut splits = Vec::with_capacity(3);
    for (split, &n) in sizes.iter().enumerate() {
        let bags: Result<Vec<Bag>> = (0..n)
            .into_par_iter()
            .map(|i| generate_bag(cfg, &signatures, split, i))
            .collect();
        splits.push(bags?);
    }
    let test = splits.pop().unwrap();
    let valid = splits.pop().unwrap();
    let train = splits.pop().unwrap();
    Ok(Dataset {
        class_names: (0..cfg.classes).map(|c| format!("class{}", c)).collect(),
        feature_dim: cfg.feature_dim,
        config: Some(cfg.clone()),
        train,
        valid,
        test,
    })
}
