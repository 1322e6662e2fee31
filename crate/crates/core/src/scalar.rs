//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real number type used for thresholds, weights, votes and scores.
///
/// Implemented for `f32` and `f64`. Everything generic in this crate is
/// written against this trait; the crate root exports `f64` aliases.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    fn from_count(count: u64) -> Self {
        Self::from_u64(count).expect("count representable as float")
    }

    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal representable as float")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Significant digits worth printing in reports.
    const REPORT_DIGITS: usize;

    /// Value rounded to [`Scalar::REPORT_DIGITS`] significant digits, so
    /// midpoint thresholds print as `37.15` rather than `37.150000000000006`.
    fn short(self) -> String {
        if !self.is_finite() {
            return self.to_string();
        }
        let rounded: f64 = format!("{:.*e}", Self::REPORT_DIGITS - 1, self.as_f64())
            .parse()
            .expect("formatted float parses");
        rounded.to_string()
    }
}

impl Scalar for f32 {
    const REPORT_DIGITS: usize = 6;
}
impl Scalar for f64 {
    const REPORT_DIGITS: usize = 12;
}

/// Index of the largest entry; the lowest index wins ties and NaN never wins.
pub fn argmax<S: Scalar>(values: &[S]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] || (values[best].is_nan() && !v.is_nan()) {
            best = i;
        }
    }
    best
}

/// Shannon entropy (bits) of a count or ratio vector. Zero total gives 0.
pub fn entropy<S: Scalar>(counts: &[S]) -> S {
    let total: S = counts.iter().copied().sum();
    if total <= S::zero() {
        return S::zero();
    }
    counts
        .iter()
        .filter(|&&c| c > S::zero())
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_drops_float_noise() {
        assert_eq!((36.1f64 + 38.2) / 2.0, 37.150000000000006);
        assert_eq!(((36.1f64 + 38.2) / 2.0).short(), "37.15");
        assert_eq!(0.179f32.short(), "0.179");
        assert_eq!(130.0f64.short(), "130");
        assert_eq!(f64::INFINITY.short(), "inf");
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[1.0_f64, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0_f32, 2.0]), 0);
        assert_eq!(argmax(&[f64::NAN, 0.5]), 1);
    }

    #[test]
    fn entropy_bounds() {
        assert_eq!(entropy(&[4.0_f64, 0.0]), 0.0);
        assert!((entropy(&[1.0_f64, 1.0]) - 1.0).abs() < 1e-12);
        assert!((entropy(&[1.0_f32, 1.0, 1.0, 1.0]) - 2.0).abs() < 1e-6);
        assert_eq!(entropy::<f64>(&[0.0, 0.0]), 0.0);
    }
}
