//! Scalar abstraction for the numeric core.
//!
//! All model math is generic over [`Scalar`] so the same code runs in
//! `f32` or `f64`. Tests and the CLI pin `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point scalar usable by the model.
///
/// Bundles the `num-traits` behavior the core relies on plus `ln_gamma`,
/// which the standard library does not expose on stable.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Display
    + Debug
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Natural log of the gamma function.
    fn ln_gamma(self) -> Self;

    /// Lossy conversion from `f64`; panics only for values outside the
    /// type's range, which no model constant is.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }

    /// Lossy conversion from a count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Widening conversion used where the host code needs `f64` (timing,
    /// CSV traces, categorical draws).
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f64 {
    fn ln_gamma(self) -> f64 {
        statrs::function::gamma::ln_gamma(self)
    }
}

impl Scalar for f32 {
    fn ln_gamma(self) -> f32 {
        statrs::function::gamma::ln_gamma(f64::from(self)) as f32
    }
}

/// Numerically stable `log(sum(exp(x)))` over a slice.
///
/// Entries of `-inf` contribute zero mass; returns `-inf` for an all-`-inf`
/// or empty slice.
pub fn log_sum_exp<T: Scalar>(values: &[T]) -> T {
    let max = values
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    if !max.is_finite() {
        return max;
    }
    let sum = values
        .iter()
        .map(|&v| (v - max).exp())
        .fold(T::zero(), |a, b| a + b);
    max + sum.ln()
}

/// Log-density of the univariate Gaussian N(x | mean, precision lambda).
pub fn ln_normal_pdf<T: Scalar>(x: T, mean: T, lambda: T) -> T {
    let half = T::of(0.5);
    let ln_two_pi = T::of(core::f64::consts::TAU.ln());
    let d = x - mean;
    half * (lambda.ln() - ln_two_pi) - half * lambda * d * d
}
