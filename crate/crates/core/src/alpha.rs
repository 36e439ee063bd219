//! Validated Rényi orders.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Minimum distance from the excluded orders 0 and 1.
pub const ALPHA_GUARD: f64 = 1e-8;

/// A Rényi order `α ∈ ℝ \ {0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AlphaOrder(f64);

impl AlphaOrder {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value.abs() <= ALPHA_GUARD || (value - 1.0).abs() <= ALPHA_GUARD {
            return Err(Error::InvalidAlpha(value));
        }
        Ok(Self(value))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// The dual order `1 − α` appearing in `R_α(Q‖P) = R_{1−α}(P‖Q)`.
    pub fn dual(self) -> Self {
        Self(1.0 - self.0)
    }

    /// `α(α − 1)`, the normalizer of the log-integral.
    #[inline]
    pub fn normalizer(self) -> f64 {
        self.0 * (self.0 - 1.0)
    }

    /// True for `α ∈ (0, 1)`, where every divergence is finite.
    pub fn in_unit_interval(self) -> bool {
        self.0 > 0.0 && self.0 < 1.0
    }
}

impl TryFrom<f64> for AlphaOrder {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<AlphaOrder> for f64 {
    fn from(a: AlphaOrder) -> f64 {
        a.0
    }
}

impl std::fmt::Display for AlphaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_excluded_orders() {
        for bad in [0.0, 1.0, 1e-9, 1.0 + 5e-9, f64::NAN, f64::INFINITY, -f64::INFINITY] {
            assert!(AlphaOrder::new(bad).is_err(), "{bad} accepted");
        }
        for ok in [-0.5, 0.3, 2.0, 1.0 + 1e-6, 2e-8] {
            assert!(AlphaOrder::new(ok).is_ok(), "{ok} rejected");
        }
    }

    #[test]
    fn dual_is_an_involution() {
        let a = AlphaOrder::new(0.25).unwrap();
        assert_eq!(a.dual().value(), 0.75);
        assert_eq!(a.dual().dual(), a);
    }

    #[test]
    fn json_round_trip_validates() {
        let a: AlphaOrder = serde_json::from_str("0.5").unwrap();
        assert_eq!(a.value(), 0.5);
        assert!(serde_json::from_str::<AlphaOrder>("1.0").is_err());
    }
}
