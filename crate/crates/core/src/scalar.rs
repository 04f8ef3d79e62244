//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the renderers, losses and optimizers are generic over.
///
/// Implemented for `f32` and `f64`. Gradient checks and acceptance runs use
/// `f64`; `f32` halves memory for large grids.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot represent it.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    /// Logistic function, written to stay finite for large |x|.
    #[inline]
    fn sigmoid(self) -> Self {
        if self >= Self::zero() {
            Self::one() / (Self::one() + (-self).exp())
        } else {
            let e = self.exp();
            e / (Self::one() + e)
        }
    }

    /// `sign` with `sign(0) = 0`.
    #[inline]
    fn sign0(self) -> Self {
        if self > Self::zero() {
            Self::one()
        } else if self < Self::zero() {
            -Self::one()
        } else {
            Self::zero()
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(0.0f64.sigmoid(), 0.5);
        assert!((1.0 - 20.0f64.sigmoid()).abs() < 1e-8);
        assert!((1.0f64.sigmoid() - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!((1.0f64.sigmoid() - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!((-800.0f64).sigmoid() >= 0.0);
        assert!(800.0f32.sigmoid().is_finite());
    }

    #[test]
    fn sign_convention() {
        assert_eq!(0.0f64.sign0(), 0.0);
        assert_eq!((-2.0f32).sign0(), -1.0);
        assert_eq!(3.0f64.sign0(), 1.0);
    }
}
