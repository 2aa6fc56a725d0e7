//! Scalar abstraction shared by every scorer, fusion routine and metric.
//!
//! All score arithmetic is written against [`Scalar`] so the engine can run in
//! `f32` (smaller stores, faster sweeps) or `f64` (the default used by the
//! CLI and the reference tests).

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point score type.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`. Panics only for types that cannot hold an
    /// `f64` at all, which no implementor does.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("scalar conversion from f64")
    }

    /// Conversion of a count.
    fn of_count(v: usize) -> Self {
        Self::from_usize(v).expect("scalar conversion from usize")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar conversion to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + LowerExp
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Sums values in iteration order. Kept explicit so every aggregate in the
/// crate accumulates the same way regardless of scalar type.
pub(crate) fn ordered_sum<S: Scalar>(values: impl IntoIterator<Item = S>) -> S {
    values.into_iter().fold(S::zero(), |acc, v| acc + v)
}
