//! Segment-based detection metrics.
//!
//! The timeline is cut into fixed-length segments (the last one may be
//! partial). A class is active in a segment when any of its intervals
//! overlaps the segment by a positive amount. Per segment, with `FN` and
//! `FP` counted over classes:
//!
//! ```text
//! S = min(FN, FP)    D = max(0, FN - FP)    I = max(0, FP - FN)
//! ER = (sum S + sum D + sum I) / sum N
//! ```
//!
//! where `N` is the number of active reference classes in the segment. F1 is
//! micro-averaged over all (segment, class) decisions.

use crate::decoder::EventInterval;
use crate::error::{Error, Result};
use crate::tensor::DenseArray;

use super::F1Counts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SegmentCounts {
    pub segments: usize,
    pub reference_active: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
}

impl SegmentCounts {
    pub fn merge(&self, o: &Self) -> Self {
        Self {
            segments: self.segments + o.segments,
            reference_active: self.reference_active + o.reference_active,
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            substitutions: self.substitutions + o.substitutions,
            deletions: self.deletions + o.deletions,
            insertions: self.insertions + o.insertions,
        }
    }

    /// Error rate in percent. With no active reference segments it is 0
    /// when there are no insertions and infinite otherwise.
    pub fn error_rate(&self) -> f64 {
        let errors = self.substitutions + self.deletions + self.insertions;
        if self.reference_active == 0 {
            return if errors == 0 { 0.0 } else { f64::INFINITY };
        }
        100.0 * errors as f64 / self.reference_active as f64
    }

    pub fn f1(&self) -> f64 {
        F1Counts {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
        }
        .f1()
    }
}

fn segment_count(duration: f64, segment: f64) -> Result<usize> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::Undefined("segment metrics need a positive duration"));
    }
    if !(segment > 0.0) {
        return Err(Error::Undefined("segment length must be positive"));
    }
    Ok((duration / segment).ceil() as usize)
}

/// `[segment][class]` activity of a set of intervals.
pub fn segment_activity(
    intervals: &[EventInterval],
    duration: f64,
    segment: f64,
    classes: usize,
) -> Result<Vec<Vec<bool>>> {
    let n = segment_count(duration, segment)?;
    let mut active = vec![vec![false; classes]; n];
    for iv in intervals {
        if iv.class >= classes {
            return Err(Error::LabelOutOfRange { id: iv.class, classes });
        }
        for (s, row) in active.iter_mut().enumerate() {
            let start = s as f64 * segment;
            if iv.overlaps(start, start + segment) {
                row[iv.class] = true;
            }
        }
    }
    Ok(active)
}

/// Counts for one recording.
pub fn segment_counts(
    hyp: &[EventInterval],
    reference: &[EventInterval],
    duration: f64,
    segment: f64,
    classes: usize,
) -> Result<SegmentCounts> {
    let h = segment_activity(hyp, duration, segment, classes)?;
    let r = segment_activity(reference, duration, segment, classes)?;
    let mut out = SegmentCounts {
        segments: h.len(),
        ..Default::default()
    };
    for (hs, rs) in h.iter().zip(&r) {
        let (mut tp, mut fp, mut fn_, mut n) = (0, 0, 0, 0);
        for (&hv, &rv) in hs.iter().zip(rs) {
            n += usize::from(rv);
            match (hv, rv) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        out.reference_active += n;
        out.tp += tp;
        out.fp += fp;
        out.fn_ += fn_;
        out.substitutions += fn_.min(fp);
        out.deletions += fn_.saturating_sub(fp);
        out.insertions += fp.saturating_sub(fn_);
    }
    Ok(out)
}

/// `(ER, F1)` in percent for one recording.
pub fn segment_metrics(
    hyp: &[EventInterval],
    reference: &[EventInterval],
    duration: f64,
    segment: f64,
    classes: usize,
) -> Result<(f64, f64)> {
    let c = segment_counts(hyp, reference, duration, segment, classes)?;
    Ok((c.error_rate(), c.f1()))
}

/// Per segment and class, the highest frame probability among frames that
/// overlap the segment (`-inf` when none does). Thresholding these scores at
/// `t` gives exactly the segment activity of the intervals extracted from the
/// frames at `t`.
pub fn segment_scores(probs: &DenseArray<f64>, frame_rate: f64, duration: f64, segment: f64) -> Result<Vec<Vec<f64>>> {
    let n = segment_count(duration, segment)?;
    let classes = probs.cols();
    let mut out = vec![vec![f64::NEG_INFINITY; classes]; n];
    for t in 0..probs.rows() {
        let frame = EventInterval {
            class: 0,
            onset: t as f64 / frame_rate,
            offset: (t + 1) as f64 / frame_rate,
        };
        for (s, row) in out.iter_mut().enumerate() {
            let start = s as f64 * segment;
            if frame.overlaps(start, start + segment) {
                for (c, v) in row.iter_mut().enumerate() {
                    *v = v.max(probs.get(t, c));
                }
            }
        }
    }
    Ok(out)
}
