//! Floating-point abstraction shared by the numeric kernels.
//!
//! Happiness aggregation, histogramming and the chi-square machinery are
//! written once against [`Scalar`] and instantiated for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts a literal constant. Only used with values representable in every implementor.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Pairwise (cascade) summation. Deterministic for a given slice order.
pub fn pairwise_sum<T: Scalar>(values: &[T]) -> T {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().fold(T::zero(), |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Arithmetic mean, `None` for an empty slice.
///
/// Deviations from the first element are summed pairwise, so a slice of
/// identical values returns that value exactly.
pub fn mean<T: Scalar>(values: &[T]) -> Option<T> {
    let (&pivot, _) = values.split_first()?;
    let deviations: Vec<T> = values.iter().map(|&v| v - pivot).collect();
    Some(pivot + pairwise_sum(&deviations) / T::from_count(values.len() as u64))
}
