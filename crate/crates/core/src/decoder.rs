//! Frame-level predictions to token sequences and event intervals.
//!
//! Best path decoding picks one symbol (or blank) per frame, collapses runs of
//! the same symbol, then removes blanks. For sigmoid heads a frame is blank
//! when its most probable class is below 0.5; the blank decision is made per
//! frame before collapsing. Argmax ties go to the lowest class id and all
//! threshold comparisons are inclusive (`>=`).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::ThresholdVector;
use crate::scalar::Scalar;
use crate::tensor::DenseArray;

/// Probability below which a sigmoid frame decodes to blank.
pub const WEAK_BLANK_BELOW: f64 = 0.5;

/// Decoded class ids in order; never contains a blank.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenSequence(pub Vec<usize>);

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// A labelled stretch of time in seconds, `[onset, offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventInterval {
    pub class: usize,
    pub onset: f64,
    pub offset: f64,
}

impl EventInterval {
    pub fn new(class: usize, onset: f64, offset: f64) -> Result<Self> {
        if !(onset >= 0.0 && onset < offset && offset.is_finite()) {
            return Err(Error::format("interval", format!("[{}, {}) is not a valid span", onset, offset)));
        }
        Ok(Self { class, onset, offset })
    }

    /// Whether the interval overlaps `[start, end)` by a positive amount.
    pub fn overlaps(&self, start: f64, end: f64) -> bool {
        self.onset < end && self.offset > start
    }
}

/// Merges runs of identical per-frame symbols (blank included).
pub fn dedup_runs(frames: &[Option<usize>]) -> Vec<Option<usize>> {
    let mut out = frames.to_vec();
    out.dedup();
    out
}

/// Collapses consecutive repeats, then drops blanks (`None`).
pub fn collapse(frames: &[Option<usize>]) -> TokenSequence {
    TokenSequence(dedup_runs(frames).into_iter().flatten().collect())
}

fn argmax<T: Scalar>(row: &[T]) -> (usize, T) {
    row.iter()
        .copied()
        .enumerate()
        .fold((0, row[0]), |best, (i, v)| if v > best.1 { (i, v) } else { best })
}

/// Best path decoding of softmax rows whose last column is the blank.
pub fn best_path_decode_ctc<T: Scalar>(probs: &DenseArray<T>) -> TokenSequence {
    let blank = probs.cols() - 1;
    let frames: Vec<Option<usize>> = (0..probs.rows())
        .map(|t| {
            let (k, _) = argmax(probs.row_slice(t));
            (k != blank).then_some(k)
        })
        .collect();
    collapse(&frames)
}

/// Best path decoding of sigmoid rows with the blank-below-0.5 rule.
pub fn best_path_decode_weak<T: Scalar>(probs: &DenseArray<T>) -> TokenSequence {
    let frames: Vec<Option<usize>> = (0..probs.rows())
        .map(|t| {
            let (k, p) = argmax(probs.row_slice(t));
            (p >= T::lit(WEAK_BLANK_BELOW)).then_some(k)
        })
        .collect();
    collapse(&frames)
}

/// Thresholds every class track and turns each maximal run of active frames
/// into an interval. Output is sorted by class, then onset.
pub fn intervals_from_frames<T: Scalar>(
    probs: &DenseArray<T>,
    thresholds: &ThresholdVector,
    frame_rate: f64,
) -> Result<Vec<EventInterval>> {
    if thresholds.len() != probs.cols() {
        return Err(Error::shape(
            "intervals_from_frames",
            format!("{} thresholds for {} classes", thresholds.len(), probs.cols()),
        ));
    }
    let mut out = Vec::new();
    for c in 0..probs.cols() {
        let th = thresholds.get(c);
        let mut start = None;
        for t in 0..=probs.rows() {
            let active = t < probs.rows() && probs.get(t, c).as_f64() >= th;
            match (active, start) {
                (true, None) => start = Some(t),
                (false, Some(s)) => {
                    out.push(EventInterval {
                        class: c,
                        onset: s as f64 / frame_rate,
                        offset: t as f64 / frame_rate,
                    });
                    start = None;
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

/// Writes `recording-id \t onset \t offset \t class-name` rows.
pub fn write_intervals_tsv<W: Write>(
    mut out: W,
    rows: &[(String, EventInterval)],
    class_names: &[String],
) -> Result<()> {
    for (id, iv) in rows {
        let name = class_names
            .get(iv.class)
            .ok_or(Error::LabelOutOfRange { id: iv.class, classes: class_names.len() })?;
        writeln!(out, "{}\t{}\t{}\t{}", id, iv.onset, iv.offset, name)?;
    }
    Ok(())
}

/// Reads rows written by [`write_intervals_tsv`]. Blank lines are skipped.
pub fn read_intervals_tsv<R: BufRead>(input: R, class_names: &[String]) -> Result<Vec<(String, EventInterval)>> {
    let mut rows = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |d: &str| Error::format("interval row", format!("line {}: {}", n + 1, d));
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(bad("expected four tab-separated fields"));
        }
        let onset: f64 = f[1].parse().map_err(|_| bad("bad onset"))?;
        let offset: f64 = f[2].parse().map_err(|_| bad("bad offset"))?;
        let class = class_names
            .iter()
            .position(|c| c == f[3])
            .ok_or_else(|| bad("unknown class name"))?;
        let iv = EventInterval::new(class, onset, offset).map_err(|_| bad("onset must precede offset"))?;
        rows.push((f[0].to_string(), iv));
    }
    Ok(rows)
}
