//! Class-specific threshold tuning for micro-averaged F1.
//!
//! Phase 1 picks, for each class on its own, the threshold with the best
//! class-wise F1. Phase 2 then visits the classes in seeded random order and
//! re-tunes one class at a time against the micro-averaged F1 with the other
//! thresholds held fixed, keeping a change only if it strictly improves the
//! score. Tuning stops after a full pass over all classes without a change.
//!
//! F1 as a function of one threshold is a step function that only changes at
//! observed scores, so searching the midpoints between consecutive distinct
//! scores (plus 0 and 1) covers every attainable value.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::objectives::WeakLabel;

use super::{F1Counts, ThresholdVector};

/// Candidate thresholds for one class: 0, 1 and the midpoints between
/// consecutive distinct finite scores, ascending.
pub fn candidate_thresholds(scores: &[f64]) -> Vec<f64> {
    let mut uniq: Vec<f64> = scores.iter().copied().filter(|v| v.is_finite()).collect();
    uniq.sort_by(f64::total_cmp);
    uniq.dedup();
    let mut out = Vec::with_capacity(uniq.len() + 1);
    out.push(0.0);
    out.extend(uniq.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    out.push(1.0);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

struct ClassColumn {
    sorted: Vec<f64>,
    /// `positives_below[i]`: reference positives among `sorted[..i]`.
    positives_below: Vec<usize>,
    candidates: Vec<f64>,
    constant: Option<f64>,
}

impl ClassColumn {
    fn new(scores: &[f64], labels: &[bool]) -> Self {
        let mut pairs: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut positives_below = Vec::with_capacity(pairs.len() + 1);
        positives_below.push(0);
        for &(_, l) in &pairs {
            positives_below.push(positives_below.last().unwrap() + usize::from(l));
        }
        let finite: Vec<f64> = scores.iter().copied().filter(|v| v.is_finite()).collect();
        let constant = match finite.first() {
            Some(&v) if finite.iter().all(|&x| x == v) => Some(v),
            None => Some(f64::NEG_INFINITY),
            _ => None,
        };
        Self {
            candidates: candidate_thresholds(scores),
            sorted: pairs.into_iter().map(|p| p.0).collect(),
            positives_below,
            constant,
        }
    }

    fn counts(&self, threshold: f64) -> F1Counts {
        let below = self.sorted.partition_point(|&s| s < threshold);
        let positives = *self.positives_below.last().unwrap();
        let tp = positives - self.positives_below[below];
        let predicted = self.sorted.len() - below;
        F1Counts {
            tp,
            fp: predicted - tp,
            fn_: positives - tp,
        }
    }
}

/// Scores with binary references, one column per class. An item is a
/// recording for tagging or a (recording, segment) pair for detection.
pub struct ScoredItems {
    columns: Vec<ClassColumn>,
    positives: usize,
}

impl ScoredItems {
    /// `scores[item][class]` with matching `labels[item][class]`.
    pub fn new(scores: &[Vec<f64>], labels: &[Vec<bool>]) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::shape("ScoredItems", "scores and labels differ in length"));
        }
        let classes = scores.first().map_or(0, Vec::len);
        if scores.iter().any(|r| r.len() != classes)
            || labels.iter().any(|r| r.len() != classes)
        {
            return Err(Error::shape("ScoredItems", "ragged score or label rows"));
        }
        let columns = (0..classes)
            .map(|c| {
                let s: Vec<f64> = scores.iter().map(|r| r[c]).collect();
                let l: Vec<bool> = labels.iter().map(|r| r[c]).collect();
                ClassColumn::new(&s, &l)
            })
            .collect();
        let positives = labels.iter().flatten().filter(|&&l| l).count();
        Ok(Self { columns, positives })
    }

    /// Recording-level scores against presence/absence labels.
    pub fn tagging(scores: &[Vec<f64>], refs: &[WeakLabel]) -> Result<Self> {
        let classes = scores.first().map_or(0, Vec::len);
        let labels: Vec<Vec<bool>> = refs.iter().map(|r| (0..classes).map(|c| r.contains(c)).collect()).collect();
        Self::new(scores, &labels)
    }

    pub fn classes(&self) -> usize {
        self.columns.len()
    }

    pub fn class_counts(&self, class: usize, threshold: f64) -> F1Counts {
        self.columns[class].counts(threshold)
    }

    pub fn micro_counts(&self, thresholds: &ThresholdVector) -> F1Counts {
        (0..self.classes()).fold(F1Counts::default(), |acc, c| acc.add(&self.class_counts(c, thresholds.get(c))))
    }

    pub fn micro_f1(&self, thresholds: &ThresholdVector) -> f64 {
        self.micro_counts(thresholds).f1()
    }

    pub fn candidates(&self, class: usize) -> &[f64] {
        &self.columns[class].candidates
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneReport {
    pub thresholds: ThresholdVector,
    /// Micro F1 after the per-class phase.
    pub phase1_f1: f64,
    pub final_f1: f64,
    /// Number of accepted re-tuning steps in the second phase.
    pub accepted: usize,
}

/// Two-phase tuning as described in the module docs. A class whose scores
/// are all identical gets a threshold above the common value in phase 1.
pub fn tune_thresholds(items: &ScoredItems, seed: u64) -> Result<TuneReport> {
    if items.positives == 0 {
        return Err(Error::Undefined("threshold tuning needs at least one positive reference"));
    }
    let classes = items.classes();
    let mut thresholds = ThresholdVector::uniform(classes, 0.5);
    for (c, col) in items.columns.iter().enumerate() {
        let t = match col.constant {
            Some(v) if v >= 1.0 => 1.0,
            Some(v) if v.is_finite() => 0.5 * (v.max(0.0) + 1.0),
            Some(_) => 1.0,
            None => {
                let mut best = (f64::NEG_INFINITY, 0.0);
                for &t in &col.candidates {
                    let f = col.counts(t).f1();
                    if f >= best.0 {
                        best = (f, t);
                    }
                }
                best.1
            }
        };
        thresholds.set(c, t);
    }
    let phase1_f1 = items.micro_f1(&thresholds);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..classes).collect();
    let mut total = items.micro_counts(&thresholds);
    let mut current = total.f1();
    let mut accepted = 0;
    loop {
        order.shuffle(&mut rng);
        let mut changed = false;
        for &c in &order {
            let col = &items.columns[c];
            let rest = total.sub(&col.counts(thresholds.get(c)));
            let mut best = (current, None);
            for &t in &col.candidates {
                let f = rest.add(&col.counts(t)).f1();
                if f > best.0 {
                    best = (f, Some(t));
                }
            }
            if let (f, Some(t)) = best {
                thresholds.set(c, t);
                total = rest.add(&col.counts(t));
                current = f;
                accepted += 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(TuneReport {
        thresholds,
        phase1_f1,
        final_f1: current,
        accepted,
    })
}
