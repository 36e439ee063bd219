use std::io::{Read, Write};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use crate::critics::{init_mlp, AnyCritic, Critic, ExpFamCritic, ParamGradient, SufficientStatistic};
use crate::measures::{sample, Distribution};
use crate::objective::{empirical_objective, objective_and_gradient, CriticOutputs, ObjectiveValue};
use crate::rng::{derive_seed, stream, Purpose};
use crate::{AlphaOrder, Error, Result};

/// A run is flagged non-converged once this many consecutive evaluations
/// exceed `DIVERGENCE_FACTOR` times the running median.
const DIVERGENCE_PATIENCE: usize = 50;
const DIVERGENCE_FACTOR: f64 = 10.0;
/// Floor on `|median|` so that estimates near zero are not flagged for noise.
const DIVERGENCE_FLOOR: f64 = 0.1;

/// Critic family and architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CriticSpec {
    /// ReLU MLP with the given hidden widths.
    Mlp { hidden: Vec<usize> },
    /// `Δκ · T(x)` for a named statistic.
    ExpFam { statistic: SufficientStatistic },
}

impl CriticSpec {
    pub fn mlp(hidden: &[usize]) -> Self {
        Self::Mlp { hidden: hidden.to_vec() }
    }

    pub fn build(&self, input_dim: usize, seed: u64, param_bound: Option<f64>) -> Result<AnyCritic> {
        match self {
            Self::Mlp { hidden } => {
                let mut dims = Vec::with_capacity(hidden.len() + 2);
                dims.push(input_dim);
                dims.extend_from_slice(hidden);
                dims.push(1);
                Ok(init_mlp(&dims, seed)?.with_param_bound(param_bound)?.into())
            }
            Self::ExpFam { statistic } => Ok(ExpFamCritic::zeros(*statistic, input_dim)?.into()),
        }
    }

    /// Short label such as `mlp[32]` or `expfam[beta]`.
    pub fn label(&self) -> String {
        match self {
            Self::Mlp { hidden } => {
                format!("mlp[{}]", hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join("x"))
            }
            Self::ExpFam { statistic } => format!("expfam[{}]", serde_json::to_value(statistic).unwrap().as_str().unwrap()),
        }
    }
}

fn default_betas() -> (f64, f64) {
    (0.9, 0.999)
}
fn default_eps() -> f64 {
    1e-8
}
fn default_eval_interval() -> usize {
    10
}
fn default_smoothing_window() -> usize {
    10
}

/// Hyperparameters of one estimator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub alpha: AlphaOrder,
    pub critic: CriticSpec,
    /// Samples drawn once from each measure.
    pub n_samples: usize,
    pub minibatch: usize,
    pub steps: usize,
    pub learning_rate: f64,
    #[serde(default = "default_betas")]
    pub betas: (f64, f64),
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub seed: u64,
    /// Number of trailing evaluations averaged into the smoothed estimate.
    #[serde(default = "default_smoothing_window")]
    pub smoothing_window: usize,
    /// Steps between full-sample evaluations.
    #[serde(default = "default_eval_interval")]
    pub eval_interval: usize,
    #[serde(default)]
    pub param_bound: Option<f64>,
}

impl TrainConfig {
    /// Defaults: Adam `(0.9, 0.999, 1e-8)`, evaluation every 10 steps, window 10.
    pub fn new(
        alpha: AlphaOrder,
        critic: CriticSpec,
        n_samples: usize,
        minibatch: usize,
        steps: usize,
        learning_rate: f64,
        seed: u64,
    ) -> Self {
        Self {
            alpha,
            critic,
            n_samples,
            minibatch,
            steps,
            learning_rate,
            betas: default_betas(),
            eps: default_eps(),
            seed,
            smoothing_window: default_smoothing_window(),
            eval_interval: default_eval_interval(),
            param_bound: None,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { learning_rate: self.learning_rate, beta1: self.betas.0, beta2: self.betas.1, eps: self.eps }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_samples == 0 || self.minibatch == 0 || self.steps == 0 {
            return bad("n_samples, minibatch and steps must be positive".into());
        }
        if self.minibatch > self.n_samples {
            return bad(format!("minibatch {} exceeds n_samples {}", self.minibatch, self.n_samples));
        }
        if self.smoothing_window == 0 || self.smoothing_window > self.steps {
            return bad(format!("smoothing_window must lie in 1..=steps, got {}", self.smoothing_window));
        }
        if self.eval_interval == 0 {
            return bad("eval_interval must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        let (b1, b2) = self.betas;
        if !(b1 > 0.0 && b1 < 1.0 && b2 > 0.0 && b2 < 1.0) {
            return bad(format!("Adam betas must lie in (0, 1), got ({b1}, {b2})"));
        }
        if !(self.eps > 0.0) {
            return bad(format!("Adam eps must be positive, got {}", self.eps));
        }
        if let Some(b) = self.param_bound {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("param_bound must be positive, got {b}"));
            }
        }
        if let CriticSpec::Mlp { hidden } = &self.critic {
            if hidden.contains(&0) {
                return bad("hidden widths must be positive".into());
            }
        }
        Ok(())
    }
}

/// One full-sample evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    pub objective: f64,
    pub term_q: f64,
    pub term_p: f64,
}

/// Training history and the resulting estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTrace {
    pub records: Vec<TraceRecord>,
    /// Mean of the last `smoothing_window` recorded objectives.
    pub smoothed_estimate: f64,
    /// The last recorded objective.
    pub final_full_sample_estimate: f64,
    /// False when the divergence heuristic fired.
    pub converged: bool,
}

impl EstimateTrace {
    /// CSV with header `step,objective,term_q,term_p`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.records {
            wr.serialize(r)?;
        }
        wr.flush().map_err(|e| Error::Serialization(e.to_string()))?;
        Ok(())
    }

    /// Parses records written by [`write_csv`](Self::write_csv).
    pub fn read_csv_records<R: Read>(r: R) -> Result<Vec<TraceRecord>> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["step", "objective", "term_q", "term_p"] {
            return Err(Error::Serialization(format!("unexpected trace header {headers:?}")));
        }
        rd.deserialize().map(|r| r.map_err(Error::from)).collect()
    }
}

/// A finished run: the trace plus the trained critic.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub trace: EstimateTrace,
    pub critic: AnyCritic,
}

fn evaluate(critic: &AnyCritic, q: &Array2<f64>, p: &Array2<f64>, alpha: AlphaOrder) -> Result<ObjectiveValue> {
    let outputs = CriticOutputs::new(critic.forward(q.view())?.to_vec(), critic.forward(p.view())?.to_vec());
    empirical_objective(&outputs, alpha)
}

struct DivergenceMonitor {
    history: Vec<f64>,
    streak: usize,
    flagged: bool,
}

impl DivergenceMonitor {
    fn observe(&mut self, value: f64) {
        if !self.history.is_empty() {
            let mut sorted = self.history.clone();
            sorted.sort_by(f64::total_cmp);
            let median = sorted[sorted.len() / 2];
            if value > DIVERGENCE_FACTOR * median.abs().max(DIVERGENCE_FLOOR) {
                self.streak += 1;
                if self.streak >= DIVERGENCE_PATIENCE {
                    self.flagged = true;
                }
            } else {
                self.streak = 0;
            }
        }
        self.history.push(value);
    }
}

/// Trains a critic on fixed samples from `Q` (`q_data`) and `P` (`p_data`).
///
/// Each step draws a minibatch from both sets without replacement; both index
/// permutations are reshuffled whenever fewer than `minibatch` unused rows
/// remain. The objective is evaluated on the full samples every
/// `eval_interval` steps and after the last step.
pub fn train_on_samples(q_data: &Array2<f64>, p_data: &Array2<f64>, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let dim = q_data.ncols();
    if p_data.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: p_data.ncols() });
    }
    let (nq, np) = (q_data.nrows(), p_data.nrows());
    if nq < cfg.minibatch || np < cfg.minibatch {
        return Err(Error::InvalidParameter(format!(
            "minibatch {} larger than the sample ({nq}, {np})",
            cfg.minibatch
        )));
    }
    let mut critic = cfg.critic.build(dim, derive_seed(cfg.seed, Purpose::Init as u64), cfg.param_bound)?;
    let mut state = AdamState::new(critic.num_params());
    let hp = cfg.adam();
    let mut shuffle_rng = stream(cfg.seed, Purpose::Shuffle);
    let mut perm_q: Vec<usize> = (0..nq).collect();
    let mut perm_p: Vec<usize> = (0..np).collect();
    let (mut cur_q, mut cur_p) = (nq, np);
    let b = cfg.minibatch;
    let mut grad = ParamGradient::zeros(critic.num_params());
    let (mut gq, mut gp) = (vec![0.0; b], vec![0.0; b]);
    let mut records = Vec::with_capacity(cfg.steps / cfg.eval_interval + 1);
    let mut monitor = DivergenceMonitor { history: Vec::new(), streak: 0, flagged: false };

    for step in 1..=cfg.steps as u64 {
        if cur_q + b > nq {
            perm_q.shuffle(&mut shuffle_rng);
            cur_q = 0;
        }
        if cur_p + b > np {
            perm_p.shuffle(&mut shuffle_rng);
            cur_p = 0;
        }
        let bq = q_data.select(Axis(0), &perm_q[cur_q..cur_q + b]);
        let bp = p_data.select(Axis(0), &perm_p[cur_p..cur_p + b]);
        cur_q += b;
        cur_p += b;

        let oq = critic.forward(bq.view())?;
        let op = critic.forward(bp.view())?;
        let oq = oq.as_slice().expect("contiguous");
        let op = op.as_slice().expect("contiguous");
        let obj = objective_and_gradient(oq, op, cfg.alpha, &mut gq, &mut gp);
        if !obj.value.is_finite() {
            return Err(Error::NonFiniteObjective { step, term_q: obj.term_q, term_p: obj.term_p });
        }
        grad.values.fill(0.0);
        critic.backward_accumulate(bq.view(), &gq, &mut grad.values)?;
        critic.backward_accumulate(bp.view(), &gp, &mut grad.values)?;
        match adam_step(&mut critic, &grad, &mut state, &hp, cfg.param_bound) {
            Err(Error::NonFiniteGradient { .. }) => return Err(Error::NonFiniteGradient { step }),
            other => other?,
        }

        if step % cfg.eval_interval as u64 == 0 || step == cfg.steps as u64 {
            let full = evaluate(&critic, q_data, p_data, cfg.alpha)?;
            if !full.value.is_finite() {
                return Err(Error::NonFiniteObjective { step, term_q: full.term_q, term_p: full.term_p });
            }
            monitor.observe(full.value);
            records.push(TraceRecord { step, objective: full.value, term_q: full.term_q, term_p: full.term_p });
        }
    }

    let window = cfg.smoothing_window.min(records.len());
    let tail = &records[records.len() - window..];
    let smoothed_estimate = tail.iter().map(|r| r.objective).sum::<f64>() / window as f64;
    let final_full_sample_estimate = records.last().expect("at least one evaluation").objective;
    Ok(TrainOutcome {
        trace: EstimateTrace { records, smoothed_estimate, final_full_sample_estimate, converged: !monitor.flagged },
        critic,
    })
}

/// Draws `n_samples` from each of `q` and `p` and trains an estimator of `R_α(Q‖P)`.
pub fn train_estimator(q: &Distribution, p: &Distribution, cfg: &TrainConfig) -> Result<EstimateTrace> {
    Ok(train_estimator_with_critic(q, p, cfg)?.trace)
}

/// Like [`train_estimator`] but also returns the trained critic.
pub fn train_estimator_with_critic(q: &Distribution, p: &Distribution, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if q.dim() != p.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), found: p.dim() });
    }
    let xq = sample(q, cfg.n_samples, derive_seed(cfg.seed, Purpose::QData as u64))?;
    let xp = sample(p, cfg.n_samples, derive_seed(cfg.seed, Purpose::PData as u64))?;
    train_on_samples(xq.data(), xp.data(), cfg)
}

/// Estimates `R_α(P_{(X,Y)} ‖ P_X × P_Y)`.
///
/// `joint` must have even dimension; its first half is `X` and its second half
/// `Y`. The `Q` sample is a joint draw. The `P` sample is an independent joint
/// draw whose `Y` halves are permuted across rows, which decouples the pairing.
pub fn estimate_mutual_information(joint: &Distribution, cfg: &TrainConfig) -> Result<EstimateTrace> {
    cfg.validate()?;
    let dim = joint.dim();
    if dim % 2 != 0 {
        return Err(Error::InvalidParameter(format!("joint law must split into two equal blocks, got dimension {dim}")));
    }
    let xq = sample(joint, cfg.n_samples, derive_seed(cfg.seed, Purpose::QData as u64))?;
    let indep = sample(joint, cfg.n_samples, derive_seed(cfg.seed, Purpose::PData as u64))?.into_data();
    let mut perm: Vec<usize> = (0..cfg.n_samples).collect();
    perm.shuffle(&mut stream(cfg.seed, Purpose::Pairing));
    let half = dim / 2;
    let mut xp = indep.clone();
    for (dst, &src) in perm.iter().enumerate() {
        for j in half..dim {
            xp[(dst, j)] = indep[(src, j)];
        }
    }
    Ok(train_on_samples(xq.data(), &xp, cfg)?.trace)
}
