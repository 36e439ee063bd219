use rand::Rng;
use rand_distr::{Distribution as _, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// A product of independent `Beta(aᵢ, bᵢ)` factors on `(0, 1)^m`.
///
/// Sampling uses the Gamma ratio `X / (X + Y)` with `X ~ Γ(a, 1)`, `Y ~ Γ(b, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BetaRepr", into = "BetaRepr")]
pub struct BetaProductSpec {
    a: Vec<f64>,
    b: Vec<f64>,
    gammas: Vec<(Gamma<f64>, Gamma<f64>)>,
    log_norm: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BetaRepr {
    a: Vec<f64>,
    b: Vec<f64>,
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

impl BetaProductSpec {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidParameter("Beta product needs at least one factor".into()));
        }
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
        }
        if let Some(v) = a.iter().chain(&b).find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!("Beta shape parameters must be positive, got {v}")));
        }
        let gammas = a
            .iter()
            .zip(&b)
            .map(|(&ai, &bi)| (Gamma::new(ai, 1.0).unwrap(), Gamma::new(bi, 1.0).unwrap()))
            .collect();
        let log_norm = a.iter().zip(&b).map(|(&ai, &bi)| ln_beta(ai, bi)).sum();
        Ok(Self { a, b, gammas, log_norm })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Shape parameters interleaved as `(a₁, b₁, a₂, b₂, …)`, the coordinates
    /// used by [`beta_log_partition`](super::exact::beta_log_partition).
    pub fn shape_params(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).flat_map(|(&a, &b)| [a, b]).collect()
    }

    /// Exact log density; `−∞` outside `[0, 1]^m`.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        let mut acc = -self.log_norm;
        for ((&xi, &ai), &bi) in x.iter().zip(&self.a).zip(&self.b) {
            if !(0.0..=1.0).contains(&xi) {
                return Ok(f64::NEG_INFINITY);
            }
            acc += xlogy(ai - 1.0, xi) + xlogy(bi - 1.0, 1.0 - xi);
        }
        Ok(acc)
    }

    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (o, (ga, gb)) in out.iter_mut().zip(&self.gammas) {
            *o = loop {
                let x = ga.sample(rng);
                let y = gb.sample(rng);
                let s = x + y;
                if s > 0.0 {
                    break x / s;
                }
            };
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(a, b)| a / (a + b)).collect()
    }

    pub fn variance(&self) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| a * b / ((a + b) * (a + b) * (a + b + 1.0)))
            .collect()
    }
}

/// `c · ln y` with the convention `0 · ln 0 = 0`.
fn xlogy(c: f64, y: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * y.ln()
    }
}

impl TryFrom<BetaRepr> for BetaProductSpec {
    type Error = Error;

    fn try_from(r: BetaRepr) -> Result<Self> {
        Self::new(r.a, r.b)
    }
}

impl From<BetaProductSpec> for BetaRepr {
    fn from(s: BetaProductSpec) -> Self {
        BetaRepr { a: s.a, b: s.b }
    }
}
