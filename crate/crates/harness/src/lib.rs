//! Configuration-driven experiments for the Rényi divergence estimator:
//! JSON configs in, CSV rows out.
//!
//! | experiment | what it runs |
//! |---|---|
//! | `gaussian-1d` | `N(1,1)` against `N(0,1)` over a grid of orders |
//! | `embedding` | a 4-dim Gaussian pair pushed through a random nonlinear map |
//! | `mi-sweep` | Rényi mutual information of correlated Gaussian blocks |
//! | `beta-expfam` | Beta products, exponential-family critic against a small MLP |
//! | `n-scaling` | relative error as the sample size grows |
//! | `complexity-table` | the sufficient sample size over an `(ε, δ)` grid |

pub mod config;
pub mod decode;
mod error;
pub mod experiments;
pub mod results;

pub use config::{ExperimentConfig, ExperimentId, TrainSettings};
pub use error::{HarnessError, Result};
pub use experiments::{
    rerun_row, run_beta_expfam, run_complexity_table, run_embedding_experiment, run_experiment, run_gaussian_1d,
    run_mi_sweep, run_n_scaling, RunOptions,
};
pub use results::{read_rows, rows_to_csv, write_rows, ComplexityRow, ResultRow};
