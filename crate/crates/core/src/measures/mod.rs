//! Reference distributions, samplers, closed-form divergences and the
//! quadrature oracle that pins them.

mod beta;
mod distribution;
mod embedding;
pub mod exact;
mod gaussian;
pub mod quadrature;

pub use beta::{ln_beta, BetaProductSpec};
pub use distribution::{sample, CorrelatedGaussian, Distribution, Pushforward, SampleBatch};
pub use embedding::{EmbeddingRow, EmbeddingSpec, MAX_EMBEDDING_ENTRIES};
pub use exact::{renyi_exact, renyi_expfam_exact, renyi_gaussian_exact, renyi_symmetry_check};
pub use gaussian::GaussianSpec;
pub use quadrature::{log_integral, renyi_quadrature_oracle, BoxDomain};
