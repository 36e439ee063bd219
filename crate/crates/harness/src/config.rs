//! Experiment configuration files.
//!
//! A config is a JSON object; see the README for the full schema. Every
//! experiment shares `experiment`, `seed`, `alphas`, `repetitions` and
//! `train`, and reads its own optional section.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use renyi_core::critics::SufficientStatistic;
use renyi_core::measures::{Distribution, GaussianSpec};
use renyi_core::trainer::{CriticSpec, TrainConfig};
use renyi_core::AlphaOrder;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Largest embedding output dimension accepted without `full_scale`.
pub const DESK_EMBEDDING_DIM: usize = 64;
/// Largest block dimension of the mutual-information sweep.
pub const MAX_BLOCK_DIM: usize = 20;
/// Largest dimension of the Beta product experiment.
pub const MAX_BETA_DIM: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentId {
    #[serde(rename = "gaussian-1d")]
    Gaussian1d,
    #[serde(rename = "embedding")]
    Embedding,
    #[serde(rename = "mi-sweep")]
    MiSweep,
    #[serde(rename = "beta-expfam")]
    BetaExpFam,
    #[serde(rename = "n-scaling")]
    NScaling,
    #[serde(rename = "complexity-table")]
    ComplexityTable,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        Self::Gaussian1d,
        Self::Embedding,
        Self::MiSweep,
        Self::BetaExpFam,
        Self::NScaling,
        Self::ComplexityTable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Gaussian1d => "gaussian-1d",
            Self::Embedding => "embedding",
            Self::MiSweep => "mi-sweep",
            Self::BetaExpFam => "beta-expfam",
            Self::NScaling => "n-scaling",
            Self::ComplexityTable => "complexity-table",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.as_str() == s).ok_or_else(|| {
            let known: Vec<_> = Self::ALL.iter().map(|e| e.as_str()).collect();
            HarnessError::Config(format!("unknown experiment {s:?}; expected one of {}", known.join(", ")))
        })
    }
}

fn default_betas() -> (f64, f64) {
    (0.9, 0.999)
}
fn default_eps() -> f64 {
    1e-8
}
fn default_window() -> usize {
    10
}
fn default_interval() -> usize {
    10
}
fn default_repetitions() -> usize {
    1
}
fn default_block_dim() -> usize {
    5
}
fn default_param_range() -> (f64, f64) {
    (0.5, 5.0)
}

/// Training hyperparameters shared by every run of an experiment. The order
/// and the seed are filled in per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub critic: CriticSpec,
    pub n_samples: usize,
    pub minibatch: usize,
    pub steps: usize,
    pub learning_rate: f64,
    #[serde(default = "default_betas")]
    pub betas: (f64, f64),
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_window")]
    pub smoothing_window: usize,
    #[serde(default = "default_interval")]
    pub eval_interval: usize,
    #[serde(default)]
    pub param_bound: Option<f64>,
}

impl TrainSettings {
    pub fn new(critic: CriticSpec, n_samples: usize, minibatch: usize, steps: usize, learning_rate: f64) -> Self {
        Self {
            critic,
            n_samples,
            minibatch,
            steps,
            learning_rate,
            betas: default_betas(),
            eps: default_eps(),
            smoothing_window: default_window(),
            eval_interval: default_interval(),
            param_bound: None,
        }
    }

    /// The trainer config of one run. A smoothing window longer than the run
    /// is shortened to the number of steps.
    pub fn train_config(&self, alpha: AlphaOrder, seed: u64) -> TrainConfig {
        TrainConfig {
            alpha,
            critic: self.critic.clone(),
            n_samples: self.n_samples,
            minibatch: self.minibatch,
            steps: self.steps,
            learning_rate: self.learning_rate,
            betas: self.betas,
            eps: self.eps,
            seed,
            smoothing_window: self.smoothing_window.min(self.steps.max(1)),
            eval_interval: self.eval_interval,
            param_bound: self.param_bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSettings {
    pub output_dim: usize,
    /// Seed of the random map; derived from the experiment seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Lifts the desk-scale cap on `output_dim`.
    #[serde(default)]
    pub full_scale: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSettings {
    pub dim: usize,
    /// Range of the uniformly drawn shape parameters.
    #[serde(default = "default_param_range")]
    pub param_range: (f64, f64),
    /// Comparison critic trained on the same data; skipped when absent.
    #[serde(default)]
    pub baseline: Option<CriticSpec>,
    /// Learning rate of the baseline; the main learning rate when absent.
    #[serde(default)]
    pub baseline_learning_rate: Option<f64>,
    /// Use the same parameters for Q and P.
    #[serde(default)]
    pub identical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexityGrid {
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    pub d_k: u64,
    pub k_k: f64,
    pub l_k: f64,
    pub m_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub train: Option<TrainSettings>,
    /// `Q` for `gaussian-1d` and `n-scaling`, the base `Q` for `embedding`.
    #[serde(default)]
    pub q: Option<Distribution>,
    #[serde(default)]
    pub p: Option<Distribution>,
    #[serde(default)]
    pub embedding: Option<EmbeddingSettings>,
    #[serde(default)]
    pub rhos: Vec<f64>,
    #[serde(default = "default_block_dim")]
    pub block_dim: usize,
    #[serde(default)]
    pub beta: Option<BetaSettings>,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub complexity: Option<ComplexityGrid>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(HarnessError::Config(msg.into()))
}

fn shifted_normal_pair() -> (Distribution, Distribution) {
    (
        Distribution::Gaussian(GaussianSpec::univariate(1.0, 1.0).expect("valid")),
        Distribution::Gaussian(GaussianSpec::univariate(0.0, 1.0).expect("valid")),
    )
}

/// The four-dimensional pair of the high-dimensional embedding study.
pub fn embedding_base_pair() -> (Distribution, Distribution) {
    (
        Distribution::Gaussian(GaussianSpec::diagonal(vec![2.0, 0.0, 0.0, 0.0], &[1.5, 0.7, 2.0, 1.0]).expect("valid")),
        Distribution::Gaussian(GaussianSpec::standard(4).expect("valid")),
    )
}

impl ExperimentConfig {
    fn bare(experiment: ExperimentId, alphas: Vec<f64>, repetitions: usize, train: Option<TrainSettings>) -> Self {
        Self {
            experiment,
            seed: 0,
            alphas,
            repetitions,
            train,
            q: None,
            p: None,
            embedding: None,
            rhos: Vec::new(),
            block_dim: default_block_dim(),
            beta: None,
            n_list: Vec::new(),
            complexity: None,
            output: None,
        }
    }

    /// Desk-scale defaults for `id`; these are the settings the acceptance
    /// suite runs.
    pub fn preset(id: ExperimentId) -> Self {
        match id {
            ExperimentId::Gaussian1d => {
                let train = TrainSettings::new(CriticSpec::mlp(&[32]), 20_000, 512, 3000, 1e-3);
                Self::bare(id, vec![0.3, 0.5, 0.7], 3, Some(train))
            }
            ExperimentId::Embedding => {
                let train = TrainSettings::new(CriticSpec::mlp(&[64]), 20_000, 512, 3000, 1e-3);
                let mut c = Self::bare(id, vec![0.5], 3, Some(train));
                c.embedding = Some(EmbeddingSettings { output_dim: 50, seed: None, full_scale: false });
                c
            }
            ExperimentId::MiSweep => {
                let train = TrainSettings::new(CriticSpec::mlp(&[32]), 100_000, 1000, 2000, 1e-3);
                let mut c = Self::bare(id, vec![0.5], 1, Some(train));
                c.rhos = (1..=9).map(|i| i as f64 / 10.0).collect();
                c
            }
            ExperimentId::BetaExpFam => {
                let critic = CriticSpec::ExpFam { statistic: SufficientStatistic::Beta };
                let train = TrainSettings::new(critic, 50_000, 5000, 1000, 0.05);
                let mut c = Self::bare(id, vec![0.2, 0.5, 0.8], 3, Some(train));
                c.beta = Some(BetaSettings {
                    dim: 5,
                    param_range: default_param_range(),
                    baseline: Some(CriticSpec::mlp(&[4])),
                    baseline_learning_rate: Some(5e-3),
                    identical: false,
                });
                c
            }
            ExperimentId::NScaling => {
                let train = TrainSettings::new(CriticSpec::mlp(&[32]), 40_000, 256, 1500, 2e-3);
                let mut c = Self::bare(id, vec![0.5], 3, Some(train));
                c.n_list = vec![2500, 5000, 10_000, 20_000, 40_000];
                c
            }
            ExperimentId::ComplexityTable => {
                let mut c = Self::bare(id, vec![0.5], 1, None);
                c.complexity = Some(ComplexityGrid {
                    epsilons: vec![0.05, 0.1, 0.2],
                    deltas: vec![0.01, 0.05, 0.1],
                    d_k: 10,
                    k_k: 1.0,
                    l_k: 1.0,
                    m_k: 1.0,
                });
                c
            }
        }
    }

    /// The full-size embedding run: 5000 output dimensions and 20000 steps.
    /// Hours of single-core compute; no tolerance is attached to it.
    pub fn full_scale_embedding() -> Self {
        let mut c = Self::preset(ExperimentId::Embedding);
        c.repetitions = 1;
        let mut train = TrainSettings::new(CriticSpec::mlp(&[256]), 100_000, 1000, 20_000, 2e-4);
        train.eval_interval = 50;
        c.train = Some(train);
        c.embedding = Some(EmbeddingSettings { output_dim: 5000, seed: None, full_scale: true });
        c
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn alpha_orders(&self) -> Result<Vec<AlphaOrder>> {
        self.alphas
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                AlphaOrder::new(a).map_err(|_| {
                    HarnessError::Config(format!(
                        "alphas[{i}] = {a}: the Rényi order must be finite and differ from 0 and 1 \
                         (use e.g. 0.999 to approach the KL limit)"
                    ))
                })
            })
            .collect()
    }

    /// Training settings, which every experiment but `complexity-table` needs.
    pub fn train_settings(&self) -> Result<&TrainSettings> {
        self.train
            .as_ref()
            .ok_or_else(|| HarnessError::Config(format!("experiment {} needs a \"train\" section", self.experiment)))
    }

    /// `(Q, P)` for the experiments that take a pair.
    pub fn pair(&self) -> Result<(Distribution, Distribution)> {
        let default = match self.experiment {
            ExperimentId::Embedding => embedding_base_pair(),
            _ => shifted_normal_pair(),
        };
        match (&self.q, &self.p) {
            (None, None) => Ok(default),
            (Some(q), Some(p)) => Ok((q.clone(), p.clone())),
            _ => config_err("give both \"q\" and \"p\" or neither"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return config_err("\"alphas\" is empty; list at least one order, e.g. \"alphas\": [0.5]");
        }
        let alphas = self.alpha_orders()?;
        if self.repetitions == 0 {
            return config_err("\"repetitions\" must be at least 1");
        }
        if self.experiment == ExperimentId::ComplexityTable {
            return self.validate_complexity();
        }
        let train = self.train_settings()?;
        train.train_config(alphas[0], self.seed).validate().map_err(|e| HarnessError::Config(format!("train: {e}")))?;
        match self.experiment {
            ExperimentId::Gaussian1d | ExperimentId::NScaling | ExperimentId::Embedding => {
                let (q, p) = self.pair()?;
                if q.dim() != p.dim() {
                    return config_err(format!("\"q\" has dimension {} but \"p\" has {}", q.dim(), p.dim()));
                }
            }
            _ => {}
        }
        match self.experiment {
            ExperimentId::Embedding => {
                let Some(emb) = &self.embedding else {
                    return config_err("experiment embedding needs an \"embedding\" section with \"output_dim\"");
                };
                let base = self.pair()?.0.dim();
                if emb.output_dim < base {
                    return config_err(format!("embedding.output_dim {} is below the base dimension {base}", emb.output_dim));
                }
                if emb.output_dim > DESK_EMBEDDING_DIM && !emb.full_scale {
                    return config_err(format!(
                        "embedding.output_dim {} exceeds the desk-scale cap {DESK_EMBEDDING_DIM}; \
                         set \"full_scale\": true to run it anyway",
                        emb.output_dim
                    ));
                }
            }
            ExperimentId::MiSweep => {
                if self.rhos.is_empty() {
                    return config_err("\"rhos\" is empty; list at least one correlation in (-1, 1)");
                }
                if let Some((i, r)) = self.rhos.iter().enumerate().find(|(_, r)| !(r.abs() < 1.0)) {
                    return config_err(format!("rhos[{i}] = {r}: correlations must lie strictly inside (-1, 1)"));
                }
                if self.block_dim == 0 || self.block_dim > MAX_BLOCK_DIM {
                    return config_err(format!("block_dim must lie in 1..={MAX_BLOCK_DIM}, got {}", self.block_dim));
                }
            }
            ExperimentId::BetaExpFam => {
                let Some(beta) = &self.beta else {
                    return config_err("experiment beta-expfam needs a \"beta\" section with \"dim\"");
                };
                if beta.dim == 0 || beta.dim > MAX_BETA_DIM {
                    return config_err(format!("beta.dim must lie in 1..={MAX_BETA_DIM}, got {}", beta.dim));
                }
                let (lo, hi) = beta.param_range;
                if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                    return config_err(format!("beta.param_range must satisfy 0 < low < high, got [{lo}, {hi}]"));
                }
                if let Some(lr) = beta.baseline_learning_rate {
                    if !(lr > 0.0 && lr.is_finite()) {
                        return config_err(format!("beta.baseline_learning_rate must be positive, got {lr}"));
                    }
                }
            }
            ExperimentId::NScaling => {
                if self.n_list.is_empty() {
                    return config_err("\"n_list\" is empty; list sample sizes in ascending order");
                }
                if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
                    return config_err(format!("\"n_list\" must be strictly ascending, got {:?}", self.n_list));
                }
                if self.n_list[0] < train.minibatch {
                    return config_err(format!(
                        "n_list starts at {} which is below the minibatch size {}",
                        self.n_list[0], train.minibatch
                    ));
                }
            }
            ExperimentId::Gaussian1d | ExperimentId::ComplexityTable => {}
        }
        Ok(())
    }

    fn validate_complexity(&self) -> Result<()> {
        let Some(grid) = &self.complexity else {
            return config_err("experiment complexity-table needs a \"complexity\" section");
        };
        if grid.epsilons.is_empty() || grid.deltas.is_empty() {
            return config_err("complexity.epsilons and complexity.deltas must both be non-empty");
        }
        Ok(())
    }
}
