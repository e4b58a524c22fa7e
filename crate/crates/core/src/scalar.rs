use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating point element type accepted throughout the crate.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal, saturating to the nearest representable value.
    fn lit(v: f64) -> Self;

    /// Smallest value allowed into a logarithm: `1e-300`, or the smallest
    /// positive normal value when the type cannot represent `1e-300`.
    fn log_floor() -> Self {
        Self::clamp_floor(1e-300)
    }

    /// `floor` converted to `Self`, raised to the smallest positive normal
    /// value if it would underflow.
    fn clamp_floor(floor: f64) -> Self {
        let v = Self::lit(floor);
        if v < Self::min_positive_value() {
            Self::min_positive_value()
        } else {
            v
        }
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn lit(v: f64) -> Self {
        v
    }
}

impl Scalar for f32 {
    #[inline]
    fn lit(v: f64) -> Self {
        v as f32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_does_not_underflow_in_single_precision() {
        assert_eq!(<f64 as Scalar>::log_floor(), 1e-300);
        assert!(<f32 as Scalar>::log_floor() > 0.0);
        assert!(<f32 as Scalar>::log_floor().ln().is_finite());
    }
}
