//! Reals extended by a single `-∞` sentinel.
//!
//! Rewards may take the value `-∞`; an expectation that puts positive mass on
//! such a reward is `-∞`. Arithmetic on the sentinel is explicit so that no
//! `NaN` ever appears (`0 · -∞` is never evaluated).

use std::cmp::Ordering;
use std::fmt;

use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extended<T> {
    Finite(T),
    NegInfinity,
}

impl<T: Float> Extended<T> {
    /// Maps `-∞` to the sentinel and rejects `NaN` and `+∞`.
    pub fn from_float(x: T) -> Option<Self> {
        if x.is_nan() || x == T::infinity() {
            None
        } else if x == T::neg_infinity() {
            Some(Extended::NegInfinity)
        } else {
            Some(Extended::Finite(x))
        }
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Extended::Finite(x) => Some(x),
            Extended::NegInfinity => None,
        }
    }

    pub fn is_neg_inf(self) -> bool {
        matches!(self, Extended::NegInfinity)
    }

    /// Float view: the sentinel becomes `T::neg_infinity()`.
    pub fn to_float(self) -> T {
        match self {
            Extended::Finite(x) => x,
            Extended::NegInfinity => T::neg_infinity(),
        }
    }

    /// Weighted term `weight · self` for a nonnegative weight; a zero weight on
    /// `-∞` contributes zero.
    pub fn weighted(self, weight: T) -> Self {
        match self {
            Extended::Finite(x) => Extended::Finite(x * weight),
            Extended::NegInfinity if weight > T::zero() => Extended::NegInfinity,
            Extended::NegInfinity => Extended::Finite(T::zero()),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Self) -> Self {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::NegInfinity,
        }
    }

    /// `|self - other|`, zero when both are `-∞` and `+∞` when exactly one is.
    pub fn abs_diff(self, other: Self) -> T {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => (a - b).abs(),
            (Extended::NegInfinity, Extended::NegInfinity) => T::zero(),
            _ => T::infinity(),
        }
    }
}

impl<T: Float> PartialOrd for Extended<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => a.partial_cmp(b),
            (Extended::NegInfinity, Extended::NegInfinity) => Some(Ordering::Equal),
            (Extended::NegInfinity, _) => Some(Ordering::Less),
            (_, Extended::NegInfinity) => Some(Ordering::Greater),
        }
    }
}

impl<T: Float> From<T> for Extended<T> {
    /// Panics on `NaN` or `+∞`; use [`Extended::from_float`] for untrusted input.
    fn from(x: T) -> Self {
        Self::from_float(x).expect("extended real must not be NaN or +inf")
    }
}

impl<T: fmt::Display> fmt::Display for Extended<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(x) => x.fmt(f),
            Extended::NegInfinity => f.write_str("-inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type E = Extended<f64>;

    #[test]
    fn zero_weight_on_sentinel_is_zero() {
        assert_eq!(E::NegInfinity.weighted(0.0), E::Finite(0.0));
        assert_eq!(E::NegInfinity.weighted(1e-30), E::NegInfinity);
    }

    #[test]
    fn rejects_nan_and_plus_infinity() {
        assert!(E::from_float(f64::NAN).is_none());
        assert!(E::from_float(f64::INFINITY).is_none());
        assert_eq!(E::from_float(f64::NEG_INFINITY), Some(E::NegInfinity));
    }

    #[test]
    fn ordering_puts_sentinel_below_everything() {
        assert!(E::NegInfinity < E::Finite(-1e300));
        assert_eq!(E::NegInfinity.abs_diff(E::NegInfinity), 0.0);
        assert!(E::NegInfinity.abs_diff(E::Finite(0.0)).is_infinite());
    }
}
