//! End-to-end scoring of trained systems.
//!
//! Presence/absence systems are scored as taggers (bag-level probabilities
//! from their own pooling function, thresholds tuned on the validation
//! split) and as detectors (the same thresholds applied to every frame,
//! runs of active frames turned into intervals, 1-second segment ER/F1 on
//! the test split). The oracle detector tunes thresholds directly on the
//! test segments and is an analysis aid only. CTC systems are scored by
//! phone error rate after best path decoding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{best_path_decode_ctc, intervals_from_frames, EventInterval, TokenSequence};
use crate::error::{Error, Result};
use crate::evaluation::{
    per_corpus, segment_activity, segment_counts, segment_scores, tune_thresholds, ScoredItems, SegmentCounts,
    ThresholdVector,
};
use crate::objectives::{pool, Pooling};
use crate::scalar::Scalar;
use crate::seqnets::{FramePredictions, Model};
use crate::synthgen::Bag;

/// Segment length for detection metrics, in seconds.
pub const SEGMENT_SECONDS: f64 = 1.0;

/// Which validation scores the decision thresholds are tuned on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdProtocol {
    /// Bag-level tagging F1; the thresholds are reused for detection.
    #[default]
    Tagging,
    /// Segment-level F1 of the detector (needs strong validation labels).
    Segment,
}

/// Frame probabilities for every bag, without dropout.
pub fn predict_split<T: Scalar>(model: &Model<T>, bags: &[Bag<T>]) -> Result<Vec<FramePredictions<f64>>> {
    bags.par_iter()
        .map(|b| {
            let p = model.predict(&b.features, b.frame_rate)?;
            Ok(FramePredictions {
                values: p.values.cast(),
                frame_rate: p.frame_rate,
                head: p.head,
            })
        })
        .collect()
}

/// Bag-level probability per class (`[bag][class]`).
pub fn tagging_scores(preds: &[FramePredictions<f64>], pooling: Pooling) -> Result<Vec<Vec<f64>>> {
    preds.iter().map(|p| Ok(pool(pooling, &p.values)?.values)).collect()
}

fn strong<T>(bag: &Bag<T>) -> Result<&[EventInterval]> {
    bag.strong.as_deref().ok_or(Error::MissingLabels("strong"))
}

/// Scores and references per (bag, segment) for segment-level tuning.
pub fn segment_items<T: Scalar>(preds: &[FramePredictions<f64>], bags: &[Bag<T>]) -> Result<ScoredItems> {
    let classes = preds.first().map_or(0, |p| p.width());
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (p, b) in preds.iter().zip(bags) {
        let duration = b.duration();
        scores.extend(segment_scores(&p.values, p.frame_rate, duration, SEGMENT_SECONDS)?);
        labels.extend(segment_activity(strong(b)?, duration, SEGMENT_SECONDS, classes)?);
    }
    ScoredItems::new(&scores, &labels)
}

/// Detected intervals for every bag.
pub fn detect(preds: &[FramePredictions<f64>], thresholds: &ThresholdVector) -> Result<Vec<Vec<EventInterval>>> {
    preds
        .iter()
        .map(|p| intervals_from_frames(&p.values, thresholds, p.frame_rate))
        .collect()
}

/// Corpus totals of the 1-second segment counts.
pub fn segment_totals<T: Scalar>(
    preds: &[FramePredictions<f64>],
    bags: &[Bag<T>],
    thresholds: &ThresholdVector,
) -> Result<SegmentCounts> {
    let hyps = detect(preds, thresholds)?;
    let mut total = SegmentCounts::default();
    for ((h, b), p) in hyps.iter().zip(bags).zip(preds) {
        let c = segment_counts(h, strong(b)?, b.duration(), SEGMENT_SECONDS, p.width())?;
        total = total.merge(&c);
    }
    Ok(total)
}

/// Median over positive (bag, class) pairs of the largest frame
/// probability of that class in that bag.
pub fn median_peak<T>(preds: &[FramePredictions<f64>], bags: &[Bag<T>]) -> Option<f64> {
    let mut peaks: Vec<f64> = preds
        .iter()
        .zip(bags)
        .flat_map(|(p, b)| {
            b.weak
                .classes()
                .map(move |c| (0..p.frames()).map(|t| p.values.get(t, c)).fold(f64::NEG_INFINITY, f64::max))
        })
        .collect();
    if peaks.is_empty() {
        return None;
    }
    peaks.sort_by(f64::total_cmp);
    let n = peaks.len();
    Some(if n % 2 == 1 { peaks[n / 2] } else { 0.5 * (peaks[n / 2 - 1] + peaks[n / 2]) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakReport {
    pub thresholds: ThresholdVector,
    pub valid_f1: f64,
    pub test_tagging_f1: f64,
    /// Detection scores; `None` without strong test labels.
    pub segment_er: Option<f64>,
    pub segment_f1: Option<f64>,
    pub oracle_segment_f1: Option<f64>,
    pub median_peak: Option<f64>,
}

impl WeakReport {
    /// `(metric, split, value)` rows for the metrics CSV.
    pub fn rows(&self) -> Vec<(String, String, f64)> {
        let mut rows = vec![
            ("tuning_f1".to_string(), "valid".to_string(), self.valid_f1),
            ("tagging_f1".to_string(), "test".to_string(), self.test_tagging_f1),
        ];
        let optional = [
            ("segment_er", self.segment_er),
            ("segment_f1", self.segment_f1),
            ("oracle_segment_f1", self.oracle_segment_f1),
            ("median_peak_probability", self.median_peak),
        ];
        for (name, v) in optional {
            if let Some(v) = v {
                rows.push((name.to_string(), "test".to_string(), v));
            }
        }
        rows
    }
}

/// Tunes thresholds on the validation predictions.
pub fn tune_on_valid<T: Scalar>(
    valid_preds: &[FramePredictions<f64>],
    valid: &[Bag<T>],
    pooling: Pooling,
    protocol: ThresholdProtocol,
    seed: u64,
) -> Result<(ThresholdVector, f64)> {
    let items = match protocol {
        ThresholdProtocol::Tagging => {
            let refs: Vec<_> = valid.iter().map(|b| b.weak.clone()).collect();
            ScoredItems::tagging(&tagging_scores(valid_preds, pooling)?, &refs)?
        }
        ThresholdProtocol::Segment => segment_items(valid_preds, valid)?,
    };
    let report = tune_thresholds(&items, seed)?;
    Ok((report.thresholds, report.final_f1))
}

/// Per-epoch model selection by tuned validation F1 under `protocol`, for
/// use with [`crate::trainer::train_with`].
pub fn tuned_f1_selector<'a, T: Scalar>(
    valid: &'a [Bag<T>],
    pooling: Pooling,
    protocol: ThresholdProtocol,
    seed: u64,
) -> impl FnMut(usize, &Model<T>, Option<f64>) -> Result<Option<f64>> + 'a {
    move |_, model, _| {
        if valid.is_empty() {
            return Ok(None);
        }
        let preds = predict_split(model, valid)?;
        Ok(Some(tune_on_valid(&preds, valid, pooling, protocol, seed)?.1))
    }
}

/// Scores on the test split with the given thresholds.
pub fn evaluate_weak_with<T: Scalar>(
    test_preds: &[FramePredictions<f64>],
    test: &[Bag<T>],
    pooling: Pooling,
    thresholds: ThresholdVector,
    valid_f1: f64,
    seed: u64,
) -> Result<WeakReport> {
    let refs: Vec<_> = test.iter().map(|b| b.weak.clone()).collect();
    let scores = tagging_scores(test_preds, pooling)?;
    let test_tagging_f1 = crate::evaluation::tagging_f1(&scores, &thresholds, &refs)?;
    let has_strong = !test.is_empty() && test.iter().all(|b| b.strong.is_some());
    let (segment_er, segment_f1, oracle) = if has_strong {
        let totals = segment_totals(test_preds, test, &thresholds)?;
        let items = segment_items(test_preds, test)?;
        let oracle = tune_thresholds(&items, seed).ok().map(|r| r.final_f1);
        (Some(totals.error_rate()), Some(totals.f1()), oracle)
    } else {
        (None, None, None)
    };
    Ok(WeakReport {
        thresholds,
        valid_f1,
        test_tagging_f1,
        segment_er,
        segment_f1,
        oracle_segment_f1: oracle,
        median_peak: median_peak(test_preds, test),
    })
}

/// Full weak-system protocol: tune on `valid`, score on `test`.
pub fn evaluate_weak<T: Scalar>(
    model: &Model<T>,
    valid: &[Bag<T>],
    test: &[Bag<T>],
    pooling: Pooling,
    protocol: ThresholdProtocol,
    seed: u64,
) -> Result<WeakReport> {
    let valid_preds = predict_split(model, valid)?;
    let (thresholds, valid_f1) = tune_on_valid(&valid_preds, valid, pooling, protocol, seed)?;
    let test_preds = predict_split(model, test)?;
    evaluate_weak_with(&test_preds, test, pooling, thresholds, valid_f1, seed)
}

/// Best path decoding of every bag.
pub fn decode_ctc(preds: &[FramePredictions<f64>]) -> Vec<TokenSequence> {
    preds.iter().map(|p| best_path_decode_ctc(&p.values)).collect()
}

/// Corpus phone error rate of a CTC system.
pub fn evaluate_ctc<T: Scalar>(model: &Model<T>, bags: &[Bag<T>]) -> Result<f64> {
    let preds = predict_split(model, bags)?;
    let pairs: Result<Vec<_>> = bags
        .iter()
        .zip(decode_ctc(&preds))
        .map(|(b, h)| {
            let r = b.sequence.clone().ok_or(Error::MissingLabels("sequential"))?;
            Ok((r, h))
        })
        .collect();
    per_corpus(&pairs?)
}
