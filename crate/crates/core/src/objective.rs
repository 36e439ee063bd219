//! The Rényi–Donsker–Varadhan objective
//!
//! `J_α(g) = 1/(α−1) · log E_Q[e^{(α−1)g}] − 1/α · log E_P[e^{αg}]`
//!
//! whose supremum over `g` is `R_α(Q‖P)`. The empirical form replaces the
//! expectations by sample means; the population form integrates against the
//! true densities by quadrature.
//!
//! Minibatch training ascends the gradient of the minibatch objective (a log
//! of a minibatch mean), which is a biased estimate of the population gradient.

use crate::measures::{log_integral, BoxDomain, Distribution};
use crate::{AlphaOrder, Error, Result};

/// An objective value with its two terms.
///
/// `value = term_q − term_p` when both terms are finite, and `−∞` otherwise
/// (so `∞ − ∞` reads as `−∞`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    /// `1/(α−1) · log E_Q[e^{(α−1)g}]`
    pub term_q: f64,
    /// `1/α · log E_P[e^{αg}]`
    pub term_p: f64,
}

impl ObjectiveValue {
    pub fn from_terms(term_q: f64, term_p: f64) -> Self {
        let value = if term_q.is_finite() && term_p.is_finite() { term_q - term_p } else { f64::NEG_INFINITY };
        Self { value, term_q, term_p }
    }
}

/// Critic values on the `Q` sample and on the `P` sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CriticOutputs {
    pub on_q: Vec<f64>,
    pub on_p: Vec<f64>,
}

impl CriticOutputs {
    pub fn new(on_q: Vec<f64>, on_p: Vec<f64>) -> Self {
        Self { on_q, on_p }
    }

    fn validate(&self) -> Result<()> {
        if self.on_q.is_empty() {
            return Err(Error::EmptyInput("critic outputs on Q"));
        }
        if self.on_p.is_empty() {
            return Err(Error::EmptyInput("critic outputs on P"));
        }
        let bad = |v: &[f64], offset: usize| {
            v.iter()
                .position(|x| !x.is_finite())
                .map(|i| Error::NonFiniteInput { index: offset + i, value: v[i] })
        };
        if let Some(e) = bad(&self.on_q, 0).or_else(|| bad(&self.on_p, self.on_q.len())) {
            return Err(e);
        }
        Ok(())
    }
}

/// `log( (1/n) Σ e^{s·xᵢ} )`, stabilized by subtracting the maximum.
pub fn log_mean_exp(xs: &[f64], scale: f64) -> f64 {
    let max = xs.iter().map(|x| scale * x).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = xs.iter().map(|x| (scale * x - max).exp()).sum();
    max + (sum / xs.len() as f64).ln()
}

/// Softmax of `scale · xs`, written into `out`.
fn softmax_into(xs: &[f64], scale: f64, sign: f64, out: &mut [f64]) {
    let max = xs.iter().map(|x| scale * x).fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, x) in out.iter_mut().zip(xs) {
        *o = (scale * x - max).exp();
        sum += *o;
    }
    let norm = sign / sum;
    for o in out.iter_mut() {
        *o *= norm;
    }
}

/// The empirical objective on critic outputs.
pub fn empirical_objective(outputs: &CriticOutputs, alpha: AlphaOrder) -> Result<ObjectiveValue> {
    outputs.validate()?;
    let a = alpha.value();
    let term_q = log_mean_exp(&outputs.on_q, a - 1.0) / (a - 1.0);
    let term_p = log_mean_exp(&outputs.on_p, a) / a;
    Ok(ObjectiveValue::from_terms(term_q, term_p))
}

/// Gradient of [`empirical_objective`] with respect to every critic output.
///
/// The `Q` side is the softmax of `(α−1)·on_q` and sums to 1; the `P` side is
/// minus the softmax of `α·on_p` and sums to −1.
pub fn objective_gradient(outputs: &CriticOutputs, alpha: AlphaOrder) -> Result<(Vec<f64>, Vec<f64>)> {
    outputs.validate()?;
    let a = alpha.value();
    let mut gq = vec![0.0; outputs.on_q.len()];
    let mut gp = vec![0.0; outputs.on_p.len()];
    softmax_into(&outputs.on_q, a - 1.0, 1.0, &mut gq);
    softmax_into(&outputs.on_p, a, -1.0, &mut gp);
    Ok((gq, gp))
}

/// Objective value and output gradients in one pass.
pub(crate) fn objective_and_gradient(
    on_q: &[f64],
    on_p: &[f64],
    alpha: AlphaOrder,
    grad_q: &mut [f64],
    grad_p: &mut [f64],
) -> ObjectiveValue {
    let a = alpha.value();
    softmax_into(on_q, a - 1.0, 1.0, grad_q);
    softmax_into(on_p, a, -1.0, grad_p);
    ObjectiveValue::from_terms(log_mean_exp(on_q, a - 1.0) / (a - 1.0), log_mean_exp(on_p, a) / a)
}

/// The objective with true expectations, evaluated by quadrature over
/// `domain` (dimension ≤ 2) with tolerance `quad_tol` on each log-integral.
pub fn population_objective(
    g: &dyn Fn(&[f64]) -> f64,
    q: &Distribution,
    p: &Distribution,
    alpha: AlphaOrder,
    domain: &BoxDomain,
    quad_tol: f64,
) -> Result<f64> {
    if q.dim() != p.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), found: p.dim() });
    }
    if domain.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), found: domain.dim() });
    }
    if q.dim() > 2 {
        return Err(Error::QuadratureDimension(q.dim()));
    }
    // Surface unsupported densities before integrating.
    q.log_density(&domain.lower)?;
    p.log_density(&domain.lower)?;
    let a = alpha.value();
    let lq = |x: &[f64]| {
        let d = q.log_density(x).unwrap_or(f64::NAN);
        if d == f64::NEG_INFINITY {
            d
        } else {
            (a - 1.0) * g(x) + d
        }
    };
    let lp = |x: &[f64]| {
        let d = p.log_density(x).unwrap_or(f64::NAN);
        if d == f64::NEG_INFINITY {
            d
        } else {
            a * g(x) + d
        }
    };
    let term_q = log_integral(&lq, domain, quad_tol)? / (a - 1.0);
    let term_p = log_integral(&lp, domain, quad_tol)? / a;
    Ok(ObjectiveValue::from_terms(term_q, term_p).value)
}
