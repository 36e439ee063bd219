//! Sample-based estimation of Rényi divergences.
//!
//! The divergence of order `α` between `Q` and `P` admits the variational
//! representation
//!
//! ```text
//! R_α(Q‖P) = sup_g { 1/(α−1) · log E_Q[e^{(α−1)g}] − 1/α · log E_P[e^{αg}] }
//! ```
//!
//! with the supremum attained at `g* = log dQ/dP`. Replacing the expectations by
//! empirical means and restricting `g` to a parametric family (a ReLU network or
//! an exponential-family linear form) gives a consistent estimator that only needs
//! samples from `Q` and `P`.
//!
//! Normalization: `R_α = D_α / α`, where `D_α` is the more common
//! `1/(α−1) · log ∫ q^α p^{1−α}` convention.
//!
//! ## Layout
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`measures`] | reference distributions, samplers, closed forms, quadrature oracle |
//! | [`objective`] | empirical and population objectives plus output gradients |
//! | [`critics`] | ReLU MLP and exponential-family critics |
//! | [`trainer`] | Adam ascent on the empirical objective, traces |
//! | [`complexity`] | sufficient sample size for a target accuracy |

pub mod alpha;
pub mod complexity;
pub mod critics;
mod error;
pub mod measures;
pub mod objective;
pub mod rng;
pub mod trainer;

pub use alpha::AlphaOrder;
pub use error::{Error, Result};
