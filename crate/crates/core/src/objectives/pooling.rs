use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseArray;

use super::Pooling;

/// One pooled probability and its log-complement `ln(1 - y)`.
///
/// Log-complements are floored at `ln(1e-300)`, the same clamp the tape
/// applies, so a frame at exactly `1` yields `y == 1` with a finite
/// complement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BagValue<T> {
    pub value: T,
    pub log_complement: T,
}

/// Bag-level probabilities, one per class.
#[derive(Debug, Clone, PartialEq)]
pub struct BagPrediction<T> {
    pub values: Vec<T>,
    pub log_complement: Vec<T>,
}

impl<T: Scalar> BagPrediction<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn log1m_floored<T: Scalar>(y: T) -> T {
    let floor = T::log_floor();
    if T::one() - y >= floor {
        (-y).ln_1p()
    } else {
        floor.ln()
    }
}

/// Max pooling: the bag is as positive as its most positive frame.
pub fn pool_max<T: Scalar>(frames: &[T]) -> Result<BagValue<T>> {
    let first = *frames.first().ok_or(Error::EmptyBag)?;
    let value = frames.iter().copied().fold(first, T::max);
    Ok(BagValue {
        value,
        log_complement: log1m_floored(value),
    })
}

/// Noisy-or pooling: probability that at least one frame is positive when
/// frames are independent. Accumulated as `sum_i ln(1 - y_i)`.
pub fn pool_noisy_or<T: Scalar>(frames: &[T]) -> Result<BagValue<T>> {
    if frames.is_empty() {
        return Err(Error::EmptyBag);
    }
    let log_complement: T = frames.iter().map(|&y| log1m_floored(y)).sum();
    Ok(BagValue {
        value: -log_complement.exp_m1(),
        log_complement,
    })
}

/// Derivative of the max-pooled value: one at the first maximal frame.
pub fn pool_max_grad<T: Scalar>(frames: &[T]) -> Result<Vec<T>> {
    let top = pool_max(frames)?.value;
    let arg = frames.iter().position(|&v| v == top).expect("maximum is an element");
    let mut g = vec![T::zero(); frames.len()];
    g[arg] = T::one();
    Ok(g)
}

/// Derivative of the noisy-or value: `prod_{j != i} (1 - y_j)` for frame `i`.
pub fn pool_noisy_or_grad<T: Scalar>(frames: &[T]) -> Result<Vec<T>> {
    if frames.is_empty() {
        return Err(Error::EmptyBag);
    }
    let logs: Vec<T> = frames.iter().map(|&y| (-y).ln_1p()).collect();
    Ok((0..frames.len())
        .map(|i| {
            logs.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &l)| l)
                .sum::<T>()
                .exp()
        })
        .collect())
}

/// Pools every column of a `T' x C` probability matrix.
pub fn pool<T: Scalar>(kind: Pooling, probs: &DenseArray<T>) -> Result<BagPrediction<T>> {
    if probs.shape().len() != 2 || probs.rows() == 0 {
        return Err(Error::EmptyBag);
    }
    let mut values = Vec::with_capacity(probs.cols());
    let mut log_complement = Vec::with_capacity(probs.cols());
    for c in 0..probs.cols() {
        let column = probs.column(c);
        let b = match kind {
            Pooling::Max => pool_max(&column)?,
            Pooling::NoisyOr => pool_noisy_or(&column)?,
        };
        values.push(b.value);
        log_complement.push(b.log_complement);
    }
    Ok(BagPrediction { values, log_complement })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn max_examples() {
        assert_eq!(pool_max(&[0.1, 0.9, 0.3]).unwrap().value, 0.9);
        assert_eq!(pool_max(&[0.02f64; 130]).unwrap().value, 0.02);
        assert!(matches!(pool_max::<f64>(&[]), Err(Error::EmptyBag)));
    }

    #[test]
    fn noisy_or_examples() {
        let y = pool_noisy_or(&[0.02f64; 130]).unwrap().value;
        assert!((y - (1.0 - 0.98f64.powi(130))).abs() < 1e-12);
        assert!((y - 0.9276).abs() < 1e-4);
        let b = pool_noisy_or(&[0.2f64; 130]).unwrap();
        let complement = b.log_complement.exp();
        assert!((complement - 0.8f64.powi(130)).abs() / complement < 1e-12);
        assert!(complement > 2.0e-13 && complement < 3.0e-13);
        assert_eq!(pool_noisy_or(&[0.37f64]).unwrap().value, 0.37);
        assert_eq!(pool_noisy_or(&[0.2, 1.0, 0.1f64]).unwrap().value, 1.0);
        assert!(matches!(pool_noisy_or::<f64>(&[]), Err(Error::EmptyBag)));
    }

    #[test]
    fn single_precision_noisy_or() {
        let y = pool_noisy_or(&[0.02f32; 130]).unwrap().value;
        assert!((y - 0.9276).abs() < 1e-3);
    }

    #[test]
    fn max_gradient_tie_goes_to_first() {
        assert_eq!(pool_max_grad(&[0.3, 0.7, 0.7f64]).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    fn frames() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, 1..60)
    }

    proptest! {
        #[test]
        fn max_never_exceeds_noisy_or(ys in frames()) {
            let m = pool_max(&ys).unwrap().value;
            let n = pool_noisy_or(&ys).unwrap().value;
            prop_assert!(m <= n + 1e-15);
            let nonzero = ys.iter().filter(|&&v| v > 0.0).count();
            if nonzero <= 1 {
                prop_assert!((m - n).abs() < 1e-15);
            } else {
                prop_assert!(m < n);
            }
        }

        #[test]
        fn pooling_is_monotone(ys in frames(), idx in any::<prop::sample::Index>(), bump in 0.0f64..0.5) {
            let i = idx.index(ys.len());
            let mut up = ys.clone();
            up[i] = (up[i] + bump).min(1.0);
            prop_assert!(pool_max(&up).unwrap().value >= pool_max(&ys).unwrap().value);
            prop_assert!(pool_noisy_or(&up).unwrap().value >= pool_noisy_or(&ys).unwrap().value);
        }

        #[test]
        fn log_space_matches_direct_product(ys in proptest::collection::vec(0.0f64..0.9, 1..40)) {
            let b = pool_noisy_or(&ys).unwrap();
            let direct = 1.0 - ys.iter().map(|y| 1.0 - y).product::<f64>();
            prop_assert!((b.value - direct).abs() < 1e-12);
            prop_assert!((b.log_complement.exp() + b.value - 1.0).abs() < 1e-9);
        }

        #[test]
        fn gradients_shape(ys in proptest::collection::vec(0.0f64..0.999, 1..40)) {
            let gm = pool_max_grad(&ys).unwrap();
            prop_assert_eq!(gm.iter().filter(|&&g| g == 1.0).count(), 1);
            prop_assert_eq!(gm.iter().filter(|&&g| g == 0.0).count(), ys.len() - 1);
            let gn = pool_noisy_or_grad(&ys).unwrap();
            prop_assert!(gn.iter().all(|&g| g > 0.0));
        }

        #[test]
        fn saturates_with_length(p in 0.01f64..0.5, t in 1usize..200) {
            let short = pool_noisy_or(&vec![p; t]).unwrap().value;
            let long = pool_noisy_or(&vec![p; t + 1]).unwrap().value;
            prop_assert!(long >= short);
        }
    }

    #[test]
    fn extremes_follow_smi() {
        let zeros = [0.0f64; 12];
        assert_eq!(pool_max(&zeros).unwrap().value, 0.0);
        assert_eq!(pool_noisy_or(&zeros).unwrap().value, 0.0);
        let mut one = zeros;
        one[5] = 1.0;
        assert_eq!(pool_max(&one).unwrap().value, 1.0);
        assert_eq!(pool_noisy_or(&one).unwrap().value, 1.0);
        assert!(pool_noisy_or(&[0.2f64; 130]).unwrap().value > 1.0 - 1e-12);
    }
}
