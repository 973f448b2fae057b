//! Scalar abstractions shared by the numerical modules.
//!
//! Linear algebra on cluster graphs (resistance, walk kernels, metric spaces)
//! is written once against these traits and instantiated with `f64` for
//! production runs, `f32` where memory matters, and exact rationals in tests.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Any ordered field element usable as a weight, potential, or probability.
pub trait Scalar:
    Num + Clone + Debug + PartialOrd + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Absolute value.
    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            Self::zero() - self.clone()
        } else {
            self.clone()
        }
    }

    fn from_usize_lossless(n: usize) -> Self {
        Self::from_usize(n).expect("scalar cannot represent integer")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a < b {
            b
        } else {
            a
        }
    }
}

impl<T> Scalar for T where
    T: Num + Clone + Debug + PartialOrd + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
}

/// Floating point scalars; needed wherever square roots or tolerances appear.
pub trait Real: Scalar + Float + Copy {}

impl<T> Real for T where T: Scalar + Float + Copy {}

/// Exact rational helper: `num/den` as a big rational.
pub fn rational(num: i64, den: i64) -> BigRational {
    Ratio::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_are_scalars() {
        fn half<T: Scalar>() -> T {
            T::one() / (T::one() + T::one())
        }
        assert_eq!(half::<BigRational>(), rational(1, 2));
        assert_eq!(half::<f64>(), 0.5);
        assert_eq!(half::<f32>(), 0.5);
        assert_eq!(rational(-3, 4).abs_val(), rational(3, 4));
        assert_eq!(Ratio::<i64>::new(1, 3).to_f64_lossy(), 1.0 / 3.0);
    }
}
