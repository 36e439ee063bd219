//! Adaptive composite Gauss–Legendre quadrature in one and two dimensions.
//!
//! Integrands are supplied as log-densities and integrated after subtracting
//! their maximum over a coarse grid, so results are returned as
//! `log ∫ f` without underflow. Each panel is integrated with a 20-point rule
//! both whole and as two halves; the panel with the largest disagreement is
//! bisected until the summed disagreement, relative to the running total, is
//! below `tol / 4`. That ratio bounds the change in the log-integral between
//! successive refinements.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{AlphaOrder, Error, Result};

const ORDER: usize = 20;
const INITIAL_PANELS: usize = 16;
const MAX_PANELS: usize = 200_000;

/// An axis-aligned box `∏ [lowerᵢ, upperᵢ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), found: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::InvalidParameter("domain must have at least one axis".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l < u)) {
            return Err(Error::InvalidParameter(format!("degenerate domain {lower:?} .. {upper:?}")));
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Self::new(
            self.lower.iter().zip(&other.lower).map(|(a, b)| a.min(*b)).collect(),
            self.upper.iter().zip(&other.upper).map(|(a, b)| a.max(*b)).collect(),
        )
    }
}

/// Nodes and weights of the `ORDER`-point Gauss–Legendre rule on `[−1, 1]`,
/// by Newton iteration on the three-term Legendre recurrence.
fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}

fn gauss<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<f64> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = 0.0;
    for &(x, w) in rule() {
        acc += w * f(mid + half * x)?;
    }
    Ok(acc * half)
}

struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    err: f64,
}

impl Panel {
    fn new<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64, whole: f64) -> Result<Self> {
        let m = 0.5 * (a + b);
        let left = gauss(f, a, m)?;
        let right = gauss(f, m, b)?;
        let refined = left + right;
        let mut err = (whole - refined).abs();
        if err <= 4.0 * f64::EPSILON * refined.abs() {
            err = 0.0;
        }
        Ok(Self { a, b, left, right, err })
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// `∫_a^b f` for a non-negative `f`, refined until the estimated relative error
/// is below `rel_tol`.
fn adaptive<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    let h = (b - a) / INITIAL_PANELS as f64;
    for i in 0..INITIAL_PANELS {
        let (lo, hi) = (a + h * i as f64, if i + 1 == INITIAL_PANELS { b } else { a + h * (i + 1) as f64 });
        let whole = gauss(f, lo, hi)?;
        heap.push(Panel::new(f, lo, hi, whole)?);
    }
    loop {
        let total: f64 = heap.iter().map(|p| p.left + p.right).sum();
        let err: f64 = heap.iter().map(|p| p.err).sum();
        if err <= rel_tol * total.abs() || total == 0.0 && err == 0.0 {
            return Ok(total);
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::QuadratureNotConverged { tol: rel_tol, panels: heap.len(), change: err / total });
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        heap.push(Panel::new(f, worst.a, m, worst.left)?);
        heap.push(Panel::new(f, m, worst.b, worst.right)?);
    }
}

/// Coarse-grid maximum of `log_f`, used as the scale shift.
fn coarse_max(log_f: &dyn Fn(&[f64]) -> f64, domain: &BoxDomain) -> f64 {
    let grid = |lo: f64, hi: f64| -> Vec<f64> {
        let h = (hi - lo) / INITIAL_PANELS as f64;
        (0..INITIAL_PANELS)
            .flat_map(|i| {
                let mid = lo + h * (i as f64 + 0.5);
                rule().iter().map(move |&(x, _)| mid + 0.5 * h * x)
            })
            .collect()
    };
    let xs = grid(domain.lower[0], domain.upper[0]);
    let mut best = f64::NEG_INFINITY;
    if domain.dim() == 1 {
        for x in xs {
            best = best.max(log_f(&[x]));
        }
    } else {
        let ys = grid(domain.lower[1], domain.upper[1]);
        for &x in &xs {
            for &y in &ys {
                best = best.max(log_f(&[x, y]));
            }
        }
    }
    best
}

fn checked_exp(log_f: &dyn Fn(&[f64]) -> f64, point: &[f64], shift: f64) -> Result<f64> {
    let lv = log_f(point);
    let v = (lv - shift).exp();
    if v.is_nan() || v.is_infinite() || lv.is_nan() {
        return Err(Error::NonFiniteIntegrand { value: lv, point: point.to_vec() });
    }
    Ok(v)
}

/// `log ∫_domain exp(log_f)` with absolute tolerance `tol` on the result.
///
/// Returns `−∞` when the integrand vanishes on the whole coarse grid.
pub fn log_integral(log_f: &dyn Fn(&[f64]) -> f64, domain: &BoxDomain, tol: f64) -> Result<f64> {
    if domain.dim() > 2 {
        return Err(Error::QuadratureDimension(domain.dim()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("quadrature tolerance must be positive, got {tol}")));
    }
    let mut shift = coarse_max(log_f, domain);
    if shift.is_nan() || shift == f64::INFINITY {
        return Err(Error::NonFiniteIntegrand { value: shift, point: domain.lower.clone() });
    }
    if shift == f64::NEG_INFINITY {
        // Either the integrand is zero or its mass sits between grid points;
        // integrate unshifted and let the quadrature decide.
        shift = 0.0;
    }
    let rel = tol / 4.0;
    let value = if domain.dim() == 1 {
        let mut f = |x: f64| checked_exp(log_f, &[x], shift);
        adaptive(&mut f, domain.lower[0], domain.upper[0], rel)?
    } else {
        let (ylo, yhi) = (domain.lower[1], domain.upper[1]);
        let inner_tol = rel / 16.0;
        let mut outer = |x: f64| {
            let mut g = |y: f64| checked_exp(log_f, &[x, y], shift);
            adaptive(&mut g, ylo, yhi, inner_tol)
        };
        adaptive(&mut outer, domain.lower[0], domain.upper[0], rel)?
    };
    Ok(value.ln() + shift)
}

/// `R_α(Q‖P)` by direct quadrature of `q^α p^{1−α}` over `domain`.
///
/// `tol` bounds the error of the log-integral, so the divergence itself is
/// accurate to `tol / |α(α−1)|` plus whatever mass the caller's domain drops.
pub fn renyi_quadrature_oracle(
    log_q: &dyn Fn(&[f64]) -> f64,
    log_p: &dyn Fn(&[f64]) -> f64,
    alpha: AlphaOrder,
    domain: &BoxDomain,
    tol: f64,
) -> Result<f64> {
    let a = alpha.value();
    let integrand = |x: &[f64]| {
        let (lq, lp) = (log_q(x), log_p(x));
        // Outside either support the integrand vanishes; avoid 0·∞ forms.
        if lq == f64::NEG_INFINITY || lp == f64::NEG_INFINITY {
            if (a > 1.0 && lp == f64::NEG_INFINITY && lq > f64::NEG_INFINITY)
                || (a < 0.0 && lq == f64::NEG_INFINITY && lp > f64::NEG_INFINITY)
            {
                return f64::INFINITY;
            }
            return f64::NEG_INFINITY;
        }
        a * lq + (1.0 - a) * lp
    };
    let log_aff = match log_integral(&integrand, domain, tol) {
        Err(Error::NonFiniteIntegrand { value, .. }) if value == f64::INFINITY => return Ok(f64::INFINITY),
        other => other?,
    };
    Ok(log_aff / alpha.normalizer())
}

/// Default truncation box for a Gaussian: `μᵢ ± 12σᵢ` per axis.
pub fn gaussian_domain(g: &crate::measures::GaussianSpec) -> Result<BoxDomain> {
    let m = g.dim();
    let sd: Vec<f64> = (0..m).map(|i| g.covariance()[(i, i)].sqrt()).collect();
    BoxDomain::new(
        (0..m).map(|i| g.mean()[i] - 12.0 * sd[i]).collect(),
        (0..m).map(|i| g.mean()[i] + 12.0 * sd[i]).collect(),
    )
}
