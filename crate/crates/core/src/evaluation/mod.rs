//! Scoring: phone error rate, micro-averaged F1, segment-based error rate,
//! and class-specific threshold tuning.
//!
//! Percentages are returned on a 0-100 scale.

mod edit;
mod segments;
mod thresholds;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::WeakLabel;

pub use edit::{edit_distance, per_corpus, EditCounts};
pub use segments::{segment_activity, segment_counts, segment_metrics, segment_scores, SegmentCounts};
pub use thresholds::{candidate_thresholds, tune_thresholds, ScoredItems, TuneReport};

/// One decision threshold per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVector(Vec<f64>);

impl ThresholdVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidConfig(format!("threshold {} outside [0, 1]", v)));
        }
        Ok(Self(values))
    }

    pub fn uniform(classes: usize, value: f64) -> Self {
        Self(vec![value; classes])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    pub fn set(&mut self, class: usize, value: f64) {
        self.0[class] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `class-name \t threshold` rows.
    pub fn write_tsv<W: Write>(&self, mut out: W, class_names: &[String]) -> Result<()> {
        for (c, t) in self.0.iter().enumerate() {
            let name = class_names
                .get(c)
                .ok_or(Error::LabelOutOfRange { id: c, classes: class_names.len() })?;
            writeln!(out, "{}\t{}", name, t)?;
        }
        Ok(())
    }

    pub fn read_tsv(text: &str, class_names: &[String]) -> Result<Self> {
        let mut values = vec![None; class_names.len()];
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (name, value) = line
                .split_once('\t')
                .ok_or_else(|| Error::format("threshold file", format!("bad row {:?}", line)))?;
            let c = class_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::format("threshold file", format!("unknown class {:?}", name)))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::format("threshold file", format!("bad value {:?}", value)))?;
            values[c] = Some(v);
        }
        let values: Option<Vec<f64>> = values.into_iter().collect();
        Self::new(values.ok_or_else(|| Error::format("threshold file", "missing classes"))?)
    }
}

/// Pooled true positive, false positive and false negative counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct F1Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl F1Counts {
    /// `2TP / (2TP + FP + FN)` as a percentage; 0 when nothing is predicted
    /// or referenced.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            100.0 * (2 * self.tp) as f64 / denom as f64
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            tp: self.tp - other.tp,
            fp: self.fp - other.fp,
            fn_: self.fn_ - other.fn_,
        }
    }

    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => {}
        }
    }
}

/// Micro-averaged tagging F1 over every (recording, class) pair.
///
/// `scores[r][c]` is the bag-level probability of class `c` in recording `r`.
pub fn tagging_f1(scores: &[Vec<f64>], thresholds: &ThresholdVector, refs: &[WeakLabel]) -> Result<f64> {
    Ok(tagging_counts(scores, thresholds, refs)?.f1())
}

pub fn tagging_counts(scores: &[Vec<f64>], thresholds: &ThresholdVector, refs: &[WeakLabel]) -> Result<F1Counts> {
    if scores.len() != refs.len() {
        return Err(Error::shape("tagging_f1", format!("{} predictions for {} references", scores.len(), refs.len())));
    }
    let mut counts = F1Counts::default();
    for (row, label) in scores.iter().zip(refs) {
        if row.len() != thresholds.len() {
            return Err(Error::shape("tagging_f1", format!("{} scores for {} thresholds", row.len(), thresholds.len())));
        }
        for (c, &s) in row.iter().enumerate() {
            counts.record(s >= thresholds.get(c), label.contains(c));
        }
    }
    Ok(counts)
}

/// Writes `metric,split,value` rows with a header.
pub fn write_metrics_csv<W: Write>(mut out: W, rows: &[(String, String, f64)]) -> Result<()> {
    writeln!(out, "metric,split,value")?;
    for (metric, split, value) in rows {
        writeln!(out, "{},{},{}", metric, split, value)?;
    }
    Ok(())
}
