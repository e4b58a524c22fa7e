//! Pooling functions, bag-level cross-entropy and the CTC baseline loss.
//!
//! Bag-level probabilities are carried together with their log-complement
//! `ln(1 - y)`. Under noisy-or pooling the complement is a product of many
//! factors below one and routinely drops under `1e-13`, where `1 - y` can no
//! longer be recovered from `y` after rounding; the loss therefore reads the
//! negative branch from the log-complement directly.

pub mod ctc;
mod pooling;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{DenseArray, Primitive, Var};

pub use ctc::ctc_loss;
pub use pooling::{pool, pool_max, pool_max_grad, pool_noisy_or, pool_noisy_or_grad, BagPrediction, BagValue};

/// Clamp applied to bag-level probabilities inside the cross-entropy.
pub const LOSS_CLAMP: f64 = 1e-12;

/// The two pooling functions compared by this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// `y = max_i y_i`
    Max,
    /// `y = 1 - prod_i (1 - y_i)`
    NoisyOr,
}

/// What a bag's summed loss is divided by.
///
/// Within a minibatch the per-bag losses are then averaged over bags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AveragingConvention {
    /// Divide by the bag's frame count `T'`.
    Frames,
    /// Divide by the class count `C`.
    UtterancesAndClasses,
    /// Divide by `T' * C`.
    FramesAndClasses,
}

impl AveragingConvention {
    pub fn denominator(self, frames: usize, classes: usize) -> f64 {
        match self {
            AveragingConvention::Frames => frames as f64,
            AveragingConvention::UtterancesAndClasses => classes as f64,
            AveragingConvention::FramesAndClasses => (frames * classes) as f64,
        }
    }
}

/// Presence/absence label: the set of classes occurring somewhere in a bag.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WeakLabel {
    present: BTreeSet<usize>,
}

impl WeakLabel {
    pub fn new(present: impl IntoIterator<Item = usize>, classes: usize) -> Result<Self> {
        let present: BTreeSet<usize> = present.into_iter().collect();
        if let Some(&id) = present.iter().find(|&&c| c >= classes) {
            return Err(Error::LabelOutOfRange { id, classes });
        }
        Ok(Self { present })
    }

    pub fn contains(&self, class: usize) -> bool {
        self.present.contains(&class)
    }

    pub fn classes(&self) -> impl Iterator<Item = usize> + '_ {
        self.present.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }

    /// `1` for present classes and `0` otherwise.
    pub fn indicator<T: Scalar>(&self, classes: usize) -> Vec<T> {
        (0..classes)
            .map(|c| if self.contains(c) { T::one() } else { T::zero() })
            .collect()
    }
}

/// Cross-entropy of one bag together with how often the clamp fired.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BagLoss<T> {
    pub loss: T,
    pub clamped: usize,
}

/// Bag-level binary cross-entropy.
///
/// Present classes contribute `-ln y`, absent classes `-ln(1 - y)` read from
/// the stored log-complement. `y` is clamped below at [`LOSS_CLAMP`] for
/// present classes; for absent classes under max pooling `1 - y` is clamped
/// the same way. Noisy-or log-complements are sums of per-frame terms that
/// are already floored, so they are used as they are.
pub fn bag_bce<T: Scalar>(
    pred: &BagPrediction<T>,
    label: &WeakLabel,
    pooling: Pooling,
    convention: AveragingConvention,
    frames: usize,
) -> Result<BagLoss<T>> {
    let classes = pred.len();
    if let Some(id) = label.classes().find(|&c| c >= classes) {
        return Err(Error::LabelOutOfRange { id, classes });
    }
    let clamp = T::lit(LOSS_CLAMP);
    let mut total = T::zero();
    let mut clamped = 0;
    for c in 0..classes {
        let (y, log_comp) = (pred.values[c], pred.log_complement[c]);
        if !log_comp.is_finite() && log_comp != T::neg_infinity() {
            return Err(Error::NonFinite { op: "bag_bce" });
        }
        if label.contains(c) {
            if y < clamp {
                clamped += 1;
            }
            total -= y.max(clamp).ln();
        } else {
            match pooling {
                Pooling::Max => {
                    if log_comp < clamp.ln() {
                        clamped += 1;
                    }
                    total -= log_comp.max(clamp.ln());
                }
                Pooling::NoisyOr => total -= log_comp,
            }
        }
    }
    Ok(BagLoss {
        loss: total / T::lit(convention.denominator(frames, classes)),
        clamped,
    })
}

/// Which training signal a system uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    /// CTC over sequential labels with a softmax head.
    Ctc,
    /// Max pooling over presence/absence labels with a sigmoid head.
    Max,
    /// Noisy-or pooling over presence/absence labels with a sigmoid head.
    NoisyOr,
}

impl ObjectiveKind {
    pub fn pooling(self) -> Option<Pooling> {
        match self {
            ObjectiveKind::Ctc => None,
            ObjectiveKind::Max => Some(Pooling::Max),
            ObjectiveKind::NoisyOr => Some(Pooling::NoisyOr),
        }
    }

    /// Averaging used by the reference systems: frames for CTC, utterances
    /// and classes for max pooling, frames and classes for noisy-or.
    pub fn default_convention(self) -> AveragingConvention {
        match self {
            ObjectiveKind::Ctc => AveragingConvention::Frames,
            ObjectiveKind::Max => AveragingConvention::UtterancesAndClasses,
            ObjectiveKind::NoisyOr => AveragingConvention::FramesAndClasses,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub convention: AveragingConvention,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind) -> Self {
        Self {
            kind,
            convention: kind.default_convention(),
        }
    }
}

/// Supervision attached to one bag for the loss.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Weak(&'a WeakLabel),
    Sequence(&'a [usize]),
}

/// Recorded bag loss plus the number of clamp events in it.
pub struct RecordedLoss<'t, T> {
    pub loss: Var<'t, T>,
    pub clamped: usize,
}

/// Bag-level cross-entropy on the tape from per-frame probabilities
/// (`T' x C`). Mirrors [`bag_bce`] term for term.
pub fn weak_loss<'t, T: Scalar>(
    probs: Var<'t, T>,
    label: &WeakLabel,
    pooling: Pooling,
    convention: AveragingConvention,
) -> Result<RecordedLoss<'t, T>> {
    let shape = probs.shape();
    let (frames, classes) = (shape[0], shape[1]);
    if frames == 0 {
        return Err(Error::EmptyBag);
    }
    if let Some(id) = label.classes().find(|&c| c >= classes) {
        return Err(Error::LabelOutOfRange { id, classes });
    }
    let tape = probs.tape();
    let (log_pos, log_neg) = match pooling {
        Pooling::Max => {
            let y = probs.max_rows()?;
            (y.log_clamped(LOSS_CLAMP)?, y.log1m(LOSS_CLAMP)?)
        }
        Pooling::NoisyOr => {
            let log_comp = probs.log1m(Primitive::LOG_FLOOR)?.sum_rows()?;
            (log_comp.log1m_exp(LOSS_CLAMP)?, log_comp)
        }
    };

    let clamped = bag_bce(&pool(pooling, &probs.value())?, label, pooling, convention, frames)?.clamped;

    let present: Vec<T> = label.indicator(classes);
    let absent: Vec<T> = present.iter().map(|&v| T::one() - v).collect();
    let present = tape.constant(DenseArray::row(present));
    let absent = tape.constant(DenseArray::row(absent));
    let total = log_pos.mul(present)?.add(log_neg.mul(absent)?)?.sum()?;
    let loss = total.scale(-1.0 / convention.denominator(frames, classes))?;
    Ok(RecordedLoss { loss, clamped })
}

/// CTC loss on the tape from unnormalized per-frame scores
/// (`T' x (C+1)`, blank in the last column).
pub fn ctc_recorded<'t, T: Scalar>(
    logits: Var<'t, T>,
    labels: &[usize],
    convention: AveragingConvention,
) -> Result<RecordedLoss<'t, T>> {
    let shape = logits.shape();
    let (frames, width) = (shape[0], shape[1]);
    let nll = logits.log_softmax()?.ctc_nll(labels.to_vec(), width - 1)?;
    let loss = nll.scale(1.0 / convention.denominator(frames, width - 1))?;
    Ok(RecordedLoss { loss, clamped: 0 })
}

impl ObjectiveSpec {
    /// Records the loss of one bag from the network's pre-activation output.
    /// Sigmoid is applied for the weak objectives, log-softmax for CTC.
    pub fn recorded_loss<'t, T: Scalar>(&self, logits: Var<'t, T>, target: Target<'_>) -> Result<RecordedLoss<'t, T>> {
        match (self.kind, target) {
            (ObjectiveKind::Ctc, Target::Sequence(labels)) => ctc_recorded(logits, labels, self.convention),
            (ObjectiveKind::Ctc, Target::Weak(_)) => Err(Error::MissingLabels("sequential")),
            (kind, Target::Weak(label)) => {
                let pooling = kind.pooling().expect("weak objective");
                weak_loss(logits.sigmoid()?, label, pooling, self.convention)
            }
            (_, Target::Sequence(_)) => Err(Error::MissingLabels("presence/absence")),
        }
    }
}
