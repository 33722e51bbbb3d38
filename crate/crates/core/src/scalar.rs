//! Scalar abstraction for scores and accuracies.
//!
//! Metrics and the predictability matrix are computed from integer counts, so
//! they can be evaluated either in floating point or as exact rationals.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::Num;

/// A number type usable for accuracies, weights and efficiency scores.
pub trait Scalar: Num + Copy + PartialOrd + Debug {
    /// Lossless (or nearest) conversion from an event count.
    fn from_count(count: u64) -> Self;

    /// Nearest `f64`, used for sampling masses and display.
    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    fn from_count(count: u64) -> Self {
        count as f64
    }

    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn from_count(count: u64) -> Self {
        count as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for Ratio<i64> {
    fn from_count(count: u64) -> Self {
        Ratio::from_integer(i64::try_from(count).expect("count exceeds i64 range"))
    }

    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Ratio of two counts in the scalar type `T`.
pub(crate) fn ratio<T: Scalar>(num: u64, den: u64) -> T {
    T::from_count(num) / T::from_count(den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_ratio_reduces() {
        let r: Ratio<i64> = ratio(6, 8);
        assert_eq!(r, Ratio::new(3, 4));
        assert_eq!(r.to_f64(), 0.75);
    }

    #[test]
    fn float_ratio() {
        let r: f32 = ratio(1, 4);
        assert_eq!(r, 0.25);
    }
}
