//! Connectionist temporal classification loss.
//!
//! The label is extended with blanks between and around its symbols
//! (`-a-b-`) and the total probability of every frame alignment that
//! collapses to the label is accumulated by the forward (alpha) and backward
//! (beta) recursions, both in log space.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseArray;

/// Negative log-likelihood and its gradient with respect to the per-frame
/// log-probabilities.
#[derive(Debug, Clone)]
pub struct CtcOutput<T> {
    pub nll: T,
    pub grad: DenseArray<T>,
}

fn log_add<T: Scalar>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Minimum frame count able to emit `labels`: one frame per symbol plus one
/// separating blank for each immediate repetition.
pub fn min_frames(labels: &[usize]) -> usize {
    labels.len() + labels.windows(2).filter(|w| w[0] == w[1]).count()
}

/// Runs both recursions over `log_probs` (`T x K`, one log-softmax row per
/// frame) for the symbol sequence `labels`, with `blank` as the blank column.
pub fn forward_backward<T: Scalar>(
    log_probs: &DenseArray<T>,
    labels: &[usize],
    blank: usize,
) -> Result<CtcOutput<T>> {
    if log_probs.shape().len() != 2 {
        return Err(Error::shape("ctc", format!("expected T x K, got {:?}", log_probs.shape())));
    }
    let (frames, width) = (log_probs.rows(), log_probs.cols());
    if blank >= width {
        return Err(Error::shape("ctc", format!("blank {} outside {} columns", blank, width)));
    }
    if let Some(&id) = labels.iter().find(|&&l| l >= width || l == blank) {
        return Err(Error::LabelOutOfRange {
            id,
            classes: width - 1,
        });
    }
    let required = min_frames(labels).max(1);
    if frames < required {
        return Err(Error::LabelTooLong {
            label_len: labels.len(),
            required,
            frames,
        });
    }

    let mut ext = Vec::with_capacity(2 * labels.len() + 1);
    ext.push(blank);
    for &l in labels {
        ext.push(l);
        ext.push(blank);
    }
    let s_len = ext.len();
    let ninf = T::neg_infinity();
    let lp = |t: usize, s: usize| log_probs.get(t, ext[s]);
    // A symbol may be reached by skipping the blank before it unless it
    // repeats the previous symbol.
    let can_skip = |s: usize| s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];

    let mut alpha = vec![ninf; frames * s_len];
    alpha[0] = lp(0, 0);
    if s_len > 1 {
        alpha[1] = lp(0, 1);
    }
    for t in 1..frames {
        let (prev, cur) = alpha.split_at_mut(t * s_len);
        let prev = &prev[(t - 1) * s_len..];
        for s in 0..s_len {
            let mut acc = prev[s];
            if s >= 1 {
                acc = log_add(acc, prev[s - 1]);
            }
            if can_skip(s) {
                acc = log_add(acc, prev[s - 2]);
            }
            cur[s] = if acc == ninf { ninf } else { acc + lp(t, s) };
        }
    }

    let mut beta = vec![ninf; frames * s_len];
    let last = frames - 1;
    beta[last * s_len + s_len - 1] = lp(last, s_len - 1);
    if s_len > 1 {
        beta[last * s_len + s_len - 2] = lp(last, s_len - 2);
    }
    for t in (0..last).rev() {
        let (cur, next) = beta.split_at_mut((t + 1) * s_len);
        let cur = &mut cur[t * s_len..];
        for s in 0..s_len {
            let mut acc = next[s];
            if s + 1 < s_len {
                acc = log_add(acc, next[s + 1]);
            }
            if s + 2 < s_len && can_skip(s + 2) {
                acc = log_add(acc, next[s + 2]);
            }
            cur[s] = if acc == ninf { ninf } else { acc + lp(t, s) };
        }
    }

    let tail = &alpha[last * s_len..];
    let log_like = if s_len > 1 {
        log_add(tail[s_len - 1], tail[s_len - 2])
    } else {
        tail[0]
    };
    if !log_like.is_finite() {
        return Err(Error::NonFinite { op: "ctc" });
    }

    let mut grad = DenseArray::zeros(&[frames, width]);
    let g = grad.data_mut();
    for t in 0..frames {
        for s in 0..s_len {
            let a = alpha[t * s_len + s];
            let b = beta[t * s_len + s];
            if a == ninf || b == ninf {
                continue;
            }
            let k = ext[s];
            g[t * width + k] -= (a + b - lp(t, s) - log_like).exp();
        }
    }
    Ok(CtcOutput {
        nll: -log_like,
        grad,
    })
}

/// CTC negative log-likelihood of `labels`.
pub fn ctc_loss<T: Scalar>(log_probs: &DenseArray<T>, labels: &[usize], blank: usize) -> Result<T> {
    forward_backward(log_probs, labels, blank).map(|o| o.nll)
}
