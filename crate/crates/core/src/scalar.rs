//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::Serialize;

/// Floating-point type the laboratory can run on: `f32` or `f64`.
///
/// Tolerances throughout the crate are quoted for `f64`. [`Scalar::tol`]
/// widens them to what the narrower type can actually resolve.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Serialize
    + Send
    + Sync
    + 'static
{
    /// Smallest tolerance this type can meaningfully enforce.
    const TOL_FLOOR: f64;

    /// Converts an `f64` literal. Every literal the crate uses is representable.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal converts to scalar")
    }

    /// An `f64` tolerance, floored at what this type can resolve.
    #[inline]
    fn tol(tol: f64) -> Self {
        Self::lit(tol.max(Self::TOL_FLOOR))
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const TOL_FLOOR: f64 = 0.0;
}

impl Scalar for f32 {
    // ~64 ulps at 1.0
    const TOL_FLOOR: f64 = 7.6e-6;
}

/// `log Σ exp(v)` with max shifting. Empty input or all `-inf` gives `-inf`.
pub fn log_sum_exp<T: Scalar, I: IntoIterator<Item = T>>(values: I) -> T {
    let values: Vec<T> = values.into_iter().collect();
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    if max == T::infinity() {
        return max;
    }
    let sum: T = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}
