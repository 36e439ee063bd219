//! Stochastic maximization of the empirical objective.

mod adam;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use train::{
    estimate_mutual_information, train_estimator, train_estimator_with_critic, train_on_samples, CriticSpec, EstimateTrace, TraceRecord,
    TrainConfig, TrainOutcome,
};
