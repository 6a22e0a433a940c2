//! Scalar abstraction for the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps};

/// Floating-point scalar the geometry, rasterization and loss kernels are
/// generic over. Implemented for `f32` and `f64`.
pub trait Real:
    Float + FromPrimitive + NumAssignOps + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into the scalar type (lossy for `f32`).
    #[inline]
    fn real(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant converts to Real scalar")
    }

    /// Converts into `f64` (exact for `f32`/`f64`).
    #[inline]
    fn to_f64_scalar(self) -> f64 {
        self.to_f64().expect("Real scalar converts to f64")
    }

    /// Numerically stable logistic function `1 / (1 + exp(-z))`.
    #[inline]
    fn sigmoid(self) -> Self {
        if self >= Self::zero() {
            (Self::one() + (-self).exp()).recip()
        } else {
            let e = self.exp();
            e / (Self::one() + e)
        }
    }

    /// Numerically stable `ln(1 + exp(z))`.
    #[inline]
    fn softplus(self) -> Self {
        self.max(Self::zero()) + (-self.abs()).exp().ln_1p()
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_matches_naive_form() {
        for &z in &[-30.0_f64, -2.5, 0.0, 0.1, 7.0, 40.0] {
            let naive = 1.0 / (1.0 + (-z).exp());
            assert!((z.sigmoid() - naive).abs() < 1e-15);
        }
    }

    #[test]
    fn sigmoid_saturates_without_overflow() {
        assert_eq!((-800.0_f64).sigmoid(), 0.0);
        assert_eq!(800.0_f64.sigmoid(), 1.0);
        assert!(800.0_f64.softplus().is_finite());
    }

    #[test]
    fn softplus_matches_naive_form() {
        for &z in &[-20.0_f64, -1.0, 0.0, 3.0, 20.0] {
            let naive = (1.0 + z.exp()).ln();
            assert!((z.softplus() - naive).abs() < 1e-12);
        }
    }
}
