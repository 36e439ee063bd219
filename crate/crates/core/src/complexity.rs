//! Sufficient sample size for the estimator to be `ε`-accurate with
//! probability at least `1 − δ`:
//!
//! ```text
//! n ≥ 32 D² / ε² · ( d log(16 L K √d / ε) + 2 d M max{|α|, |α−1|} + log(4/δ) )
//! D = max{ e^{2|α|M} / |α|, e^{2|α−1|M} / |α−1| }
//! ```
//!
//! where the critic family has `d` parameters of norm at most `K`, is bounded
//! by `M`, and is `L`-Lipschitz in its parameters. Everything is evaluated in
//! log space; `D` overflows `f64` for `M` beyond a few hundred.

use serde::{Deserialize, Serialize};

use crate::{AlphaOrder, Error, Result};

/// Sample counts at or above this are reported as astronomically large; it is
/// the largest range in which every integer is an `f64`.
pub const EXACT_INTEGER_LIMIT: f64 = 9_007_199_254_740_992.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityInput {
    pub epsilon: f64,
    pub delta: f64,
    /// Parameter dimension `d_k`.
    pub d_k: u64,
    /// Parameter norm bound `K_k`.
    pub k_k: f64,
    /// Lipschitz constant in the parameters `L_k`.
    pub l_k: f64,
    /// Sup bound of the critic `M_k`.
    pub m_k: f64,
    pub alpha: AlphaOrder,
}

impl ComplexityInput {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos("epsilon", self.epsilon)?;
        pos("K_k", self.k_k)?;
        pos("L_k", self.l_k)?;
        pos("M_k", self.m_k)?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.d_k == 0 {
            return Err(Error::InvalidParameter("d_k must be positive".into()));
        }
        Ok(())
    }
}

/// The number of samples the bound requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleCount {
    /// `⌈bound⌉`.
    Exact(u64),
    /// Past [`EXACT_INTEGER_LIMIT`]; see `log_n` for the magnitude.
    AstronomicallyLarge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityBound {
    /// Natural log of the real-valued threshold.
    pub log_n: f64,
    /// The threshold itself; `+∞` when it overflows.
    pub raw: f64,
    pub samples: SampleCount,
}

/// `log D_{α,k}`.
pub fn log_d_alpha(alpha: AlphaOrder, m_k: f64) -> f64 {
    let a = alpha.value().abs();
    let b = (alpha.value() - 1.0).abs();
    (2.0 * a * m_k - a.ln()).max(2.0 * b * m_k - b.ln())
}

pub fn sample_complexity_bound(inp: &ComplexityInput) -> Result<ComplexityBound> {
    inp.validate()?;
    let d = inp.d_k as f64;
    let log_arg = 16.0 * inp.l_k * inp.k_k * d.sqrt() / inp.epsilon;
    if !(log_arg > 1.0) {
        return Err(Error::VacuousBound(log_arg));
    }
    let a = inp.alpha.value();
    let bracket = d * log_arg.ln() + 2.0 * d * inp.m_k * a.abs().max((a - 1.0).abs()) + (4.0 / inp.delta).ln();
    let log_d = log_d_alpha(inp.alpha, inp.m_k);
    let log_n = 32f64.ln() + 2.0 * log_d - 2.0 * inp.epsilon.ln() + bracket.ln();
    let raw = if 2.0 * log_d < 700.0 {
        let (a, b) = (a.abs(), (a - 1.0).abs());
        let d_alpha = ((2.0 * a * inp.m_k).exp() / a).max((2.0 * b * inp.m_k).exp() / b);
        32.0 * d_alpha * d_alpha / (inp.epsilon * inp.epsilon) * bracket
    } else {
        log_n.exp()
    };
    let samples = if raw < EXACT_INTEGER_LIMIT {
        SampleCount::Exact(raw.ceil() as u64)
    } else {
        SampleCount::AstronomicallyLarge
    };
    Ok(ComplexityBound { log_n, raw, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(alpha: f64) -> ComplexityInput {
        ComplexityInput {
            epsilon: 0.1,
            delta: 0.05,
            d_k: 10,
            k_k: 1.0,
            l_k: 1.0,
            m_k: 1.0,
            alpha: AlphaOrder::new(alpha).unwrap(),
        }
    }

    #[test]
    fn vacuous_bound_is_an_error() {
        let inp = ComplexityInput { epsilon: 100.0, ..input(0.5) };
        assert!(matches!(sample_complexity_bound(&inp), Err(Error::VacuousBound(_))));
    }

    #[test]
    fn overflow_is_flagged() {
        let inp = ComplexityInput { m_k: 500.0, ..input(2.0) };
        let b = sample_complexity_bound(&inp).unwrap();
        assert_eq!(b.samples, SampleCount::AstronomicallyLarge);
        assert_eq!(b.raw, f64::INFINITY);
        assert!(b.log_n.is_finite() && b.log_n > 1000.0);
    }

    #[test]
    fn d_is_symmetric_under_dual_order() {
        for a in [0.1, 0.3, -0.5, 2.0, 3.7] {
            let al = AlphaOrder::new(a).unwrap();
            assert_eq!(log_d_alpha(al, 1.3), log_d_alpha(al.dual(), 1.3));
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(sample_complexity_bound(&ComplexityInput { delta: 1.0, ..input(0.5) }).is_err());
        assert!(sample_complexity_bound(&ComplexityInput { d_k: 0, ..input(0.5) }).is_err());
        assert!(sample_complexity_bound(&ComplexityInput { epsilon: -1.0, ..input(0.5) }).is_err());
    }
}
