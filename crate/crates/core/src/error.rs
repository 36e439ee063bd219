use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alpha: {0} (must be finite and at least 1e-8 away from 0 and 1)")]
    InvalidAlpha(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("density unavailable for {0}")]
    UnsupportedDensity(&'static str),

    #[error("quadrature supports at most 2 dimensions, got {0}")]
    QuadratureDimension(usize),

    #[error("non-finite integrand value {value} at {point:?}")]
    NonFiniteIntegrand { value: f64, point: Vec<f64> },

    #[error("quadrature did not reach tolerance {tol} after {panels} panels (last change {change})")]
    QuadratureNotConverged { tol: f64, panels: usize, change: f64 },

    #[error("log-partition function is not finite at {0:?}")]
    LogPartition(Vec<f64>),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite input at index {index}: {value}")]
    NonFiniteInput { index: usize, value: f64 },

    #[error("non-finite gradient at step {step}")]
    NonFiniteGradient { step: u64 },

    #[error("non-finite objective at step {step} (term_q = {term_q}, term_p = {term_p})")]
    NonFiniteObjective { step: u64, term_q: f64, term_p: f64 },

    #[error("sample-complexity bound is vacuous: 16·L·K·√d/ε = {0} must exceed 1")]
    VacuousBound(f64),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
