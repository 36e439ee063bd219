//! Experiment runners.
//!
//! An experiment expands into a list of jobs, one per (grid cell, repetition).
//! Job `k` trains with seed `derive_seed(config.seed, k)`, and that seed is
//! recorded in its row. Everything random inside a job (data, pairing,
//! initialization, shuffling, Beta parameters) comes from purpose streams of
//! the job seed, so a row is reproduced by [`rerun_row`] from the config and
//! the row alone. Jobs run on the rayon pool and rows come back in job order.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use renyi_core::complexity::{sample_complexity_bound, ComplexityInput, SampleCount};
use renyi_core::measures::{renyi_exact, BetaProductSpec, Distribution, EmbeddingSpec};
use renyi_core::rng::{derive_seed, stream, Purpose};
use renyi_core::trainer::{estimate_mutual_information, train_estimator, CriticSpec, EstimateTrace};
use renyi_core::AlphaOrder;
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentId};
use crate::error::{HarnessError, Result};
use crate::results::{relative_error, ComplexityRow, ResultRow};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall-clock seconds per run (makes the CSV non-reproducible).
    pub timing: bool,
}

/// What one job trains, minus the seed.
#[derive(Debug, Clone, PartialEq)]
struct Job {
    alpha: f64,
    rho: Option<f64>,
    n_samples: usize,
    run: usize,
    estimator: Estimator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Estimator {
    Main,
    Baseline,
}

fn jobs(cfg: &ExperimentConfig) -> Result<Vec<Job>> {
    let train = cfg.train_settings()?;
    let mut out = Vec::new();
    let reps = cfg.repetitions;
    let push = |out: &mut Vec<Job>, alpha: f64, rho: Option<f64>, n: usize, estimator| {
        for run in 0..reps {
            out.push(Job { alpha, rho, n_samples: n, run, estimator });
        }
    };
    for &alpha in &cfg.alphas {
        match cfg.experiment {
            ExperimentId::Gaussian1d | ExperimentId::Embedding => push(&mut out, alpha, None, train.n_samples, Estimator::Main),
            ExperimentId::MiSweep => {
                for &rho in &cfg.rhos {
                    push(&mut out, alpha, Some(rho), train.n_samples, Estimator::Main);
                }
            }
            ExperimentId::BetaExpFam => {
                // Both estimators of a repetition share one seed and hence one dataset.
                let baseline = cfg.beta.as_ref().is_some_and(|b| b.baseline.is_some());
                for run in 0..reps {
                    out.push(Job { alpha, rho: None, n_samples: train.n_samples, run, estimator: Estimator::Main });
                    if baseline {
                        out.push(Job { alpha, rho: None, n_samples: train.n_samples, run, estimator: Estimator::Baseline });
                    }
                }
            }
            ExperimentId::NScaling => {
                for &n in &cfg.n_list {
                    push(&mut out, alpha, None, n, Estimator::Main);
                }
            }
            ExperimentId::ComplexityTable => {
                return Err(HarnessError::Config("complexity-table has no training runs".into()));
            }
        }
    }
    Ok(out)
}

/// Seeds are assigned per (cell, repetition); the baseline of a Beta cell
/// reuses the seed of the exponential-family job just before it.
fn job_seeds(cfg: &ExperimentConfig, jobs: &[Job]) -> Vec<u64> {
    let mut k = 0u64;
    let mut seeds = Vec::with_capacity(jobs.len());
    for job in jobs {
        if job.estimator == Estimator::Main {
            seeds.push(derive_seed(cfg.seed, k));
            k += 1;
        } else {
            seeds.push(*seeds.last().expect("baseline follows its main job"));
        }
    }
    seeds
}

/// The embedding map of an embedding experiment.
pub fn embedding_map(cfg: &ExperimentConfig) -> Result<EmbeddingSpec> {
    let emb = cfg
        .embedding
        .as_ref()
        .ok_or_else(|| HarnessError::Config("missing \"embedding\" section".into()))?;
    let base_dim = cfg.pair()?.0.dim();
    let seed = emb.seed.unwrap_or_else(|| derive_seed(cfg.seed, Purpose::Embedding as u64));
    Ok(EmbeddingSpec::generate(base_dim, emb.output_dim, seed)?)
}

/// The Beta pair of a run: `4·dim` shape parameters drawn uniformly from the
/// configured range with the run's parameter stream.
pub fn beta_pair(cfg: &ExperimentConfig, seed: u64) -> Result<(BetaProductSpec, BetaProductSpec)> {
    let beta = cfg.beta.as_ref().ok_or_else(|| HarnessError::Config("missing \"beta\" section".into()))?;
    let (lo, hi) = beta.param_range;
    let mut rng = stream(seed, Purpose::Params);
    let mut draw = || -> Vec<f64> { (0..beta.dim).map(|_| rng.random_range(lo..=hi)).collect() };
    let q = BetaProductSpec::new(draw(), draw())?;
    let p = if beta.identical { q.clone() } else { BetaProductSpec::new(draw(), draw())? };
    Ok((q, p))
}

struct Outcome {
    estimator: String,
    trace: EstimateTrace,
    exact: f64,
}

fn run_job(cfg: &ExperimentConfig, job: &Job, seed: u64) -> Result<Outcome> {
    let alpha = AlphaOrder::new(job.alpha)?;
    let mut settings = cfg.train_settings()?.clone();
    settings.n_samples = job.n_samples;
    match cfg.experiment {
        ExperimentId::Gaussian1d | ExperimentId::NScaling => {
            let (q, p) = cfg.pair()?;
            let tc = settings.train_config(alpha, seed);
            let exact = renyi_exact(&q, &p, alpha)?;
            Ok(Outcome { estimator: tc.critic.label(), trace: train_estimator(&q, &p, &tc)?, exact })
        }
        ExperimentId::Embedding => {
            let (q, p) = cfg.pair()?;
            let exact = renyi_exact(&q, &p, alpha)?;
            let h = embedding_map(cfg)?;
            let q = Distribution::pushforward(q, h.clone())?;
            let p = Distribution::pushforward(p, h)?;
            let tc = settings.train_config(alpha, seed);
            Ok(Outcome { estimator: tc.critic.label(), trace: train_estimator(&q, &p, &tc)?, exact })
        }
        ExperimentId::MiSweep => {
            let rho = job.rho.ok_or_else(|| HarnessError::Config("mi-sweep row without rho".into()))?;
            let joint = Distribution::joint_correlated(cfg.block_dim, rho)?;
            let product = Distribution::product_of_marginals(cfg.block_dim, rho)?;
            let exact = renyi_exact(&joint, &product, alpha)?;
            let tc = settings.train_config(alpha, seed);
            Ok(Outcome { estimator: tc.critic.label(), trace: estimate_mutual_information(&joint, &tc)?, exact })
        }
        ExperimentId::BetaExpFam => {
            let beta = cfg.beta.as_ref().ok_or_else(|| HarnessError::Config("missing \"beta\" section".into()))?;
            if job.estimator == Estimator::Baseline {
                settings.critic = beta
                    .baseline
                    .clone()
                    .ok_or_else(|| HarnessError::Config("baseline row without beta.baseline".into()))?;
                if let Some(lr) = beta.baseline_learning_rate {
                    settings.learning_rate = lr;
                }
            }
            let (q, p) = beta_pair(cfg, seed)?;
            let (q, p) = (Distribution::BetaProduct(q), Distribution::BetaProduct(p));
            let exact = renyi_exact(&q, &p, alpha)?;
            let tc = settings.train_config(alpha, seed);
            Ok(Outcome { estimator: tc.critic.label(), trace: train_estimator(&q, &p, &tc)?, exact })
        }
        ExperimentId::ComplexityTable => Err(HarnessError::Config("complexity-table has no training runs".into())),
    }
}

fn to_row(cfg: &ExperimentConfig, job: &Job, seed: u64, out: Outcome, wall: Option<f64>) -> ResultRow {
    let estimate = out.trace.smoothed_estimate;
    ResultRow {
        experiment: cfg.experiment.as_str().to_string(),
        estimator: out.estimator,
        alpha: job.alpha,
        rho: job.rho,
        n_samples: job.n_samples,
        run: job.run,
        seed,
        estimate,
        exact: Some(out.exact),
        relative_error: Some(relative_error(estimate, out.exact)),
        converged: out.trace.converged,
        wall_time_s: wall,
    }
}

/// Runs every training job of `cfg` and returns one row per job.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let jobs = jobs(cfg)?;
    let seeds = job_seeds(cfg, &jobs);
    jobs.par_iter()
        .zip(seeds.par_iter())
        .map(|(job, &seed)| {
            let start = Instant::now();
            let out = run_job(cfg, job, seed)?;
            let wall = opts.timing.then(|| start.elapsed().as_secs_f64());
            Ok(to_row(cfg, job, seed, out, wall))
        })
        .collect()
}

fn expect_kind(cfg: &ExperimentConfig, id: ExperimentId) -> Result<()> {
    if cfg.experiment != id {
        return Err(HarnessError::Config(format!("expected a {id} config, got {}", cfg.experiment)));
    }
    Ok(())
}

pub fn run_gaussian_1d(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<ResultRow>> {
    expect_kind(cfg, ExperimentId::Gaussian1d)?;
    run_experiment(cfg, opts)
}

pub fn run_embedding_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<ResultRow>> {
    expect_kind(cfg, ExperimentId::Embedding)?;
    run_experiment(cfg, opts)
}

pub fn run_mi_sweep(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<ResultRow>> {
    expect_kind(cfg, ExperimentId::MiSweep)?;
    run_experiment(cfg, opts)
}

pub fn run_beta_expfam(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<ResultRow>> {
    expect_kind(cfg, ExperimentId::BetaExpFam)?;
    run_experiment(cfg, opts)
}

pub fn run_n_scaling(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<ResultRow>> {
    expect_kind(cfg, ExperimentId::NScaling)?;
    run_experiment(cfg, opts)
}

/// Re-trains the run behind `row` and returns its estimate.
pub fn rerun_row(cfg: &ExperimentConfig, row: &ResultRow) -> Result<f64> {
    if row.experiment != cfg.experiment.as_str() {
        return Err(HarnessError::Config(format!("row is from {}, config is {}", row.experiment, cfg.experiment)));
    }
    let main_label = cfg.train_settings()?.critic.label();
    let baseline_label = cfg.beta.as_ref().and_then(|b| b.baseline.as_ref()).map(CriticSpec::label);
    let estimator = if row.estimator == main_label {
        Estimator::Main
    } else if Some(&row.estimator) == baseline_label.as_ref() {
        Estimator::Baseline
    } else {
        return Err(HarnessError::Config(format!("row estimator {} is not configured", row.estimator)));
    };
    let job = Job { alpha: row.alpha, rho: row.rho, n_samples: row.n_samples, run: row.run, estimator };
    Ok(run_job(cfg, &job, row.seed)?.trace.smoothed_estimate)
}

/// Evaluates the sample-complexity bound on the configured grid.
pub fn run_complexity_table(cfg: &ExperimentConfig) -> Result<Vec<ComplexityRow>> {
    expect_kind(cfg, ExperimentId::ComplexityTable)?;
    cfg.validate()?;
    let grid = cfg.complexity.as_ref().expect("validated");
    let mut rows = Vec::new();
    for alpha in cfg.alpha_orders()? {
        for &epsilon in &grid.epsilons {
            for &delta in &grid.deltas {
                let inp = ComplexityInput {
                    epsilon,
                    delta,
                    d_k: grid.d_k,
                    k_k: grid.k_k,
                    l_k: grid.l_k,
                    m_k: grid.m_k,
                    alpha,
                };
                let b = sample_complexity_bound(&inp)?;
                let samples = match b.samples {
                    SampleCount::Exact(n) => Some(n),
                    SampleCount::AstronomicallyLarge => None,
                };
                rows.push(ComplexityRow {
                    alpha: alpha.value(),
                    epsilon,
                    delta,
                    d_k: grid.d_k,
                    k_k: grid.k_k,
                    l_k: grid.l_k,
                    m_k: grid.m_k,
                    log_n: b.log_n,
                    samples,
                    astronomically_large: samples.is_none(),
                });
            }
        }
    }
    Ok(rows)
}

/// Mean relative error per sample size and the least-squares slope of
/// `log(mean error)` against `log N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingSummary {
    pub points: Vec<(usize, f64)>,
    pub slope: f64,
}

pub fn scaling_summary(rows: &[ResultRow]) -> Option<ScalingSummary> {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n_samples).collect();
    ns.sort_unstable();
    ns.dedup();
    let points: Vec<(usize, f64)> = ns
        .into_iter()
        .map(|n| {
            let errs: Vec<f64> = rows.iter().filter(|r| r.n_samples == n).filter_map(|r| r.relative_error).collect();
            (n, errs.iter().sum::<f64>() / errs.len() as f64)
        })
        .collect();
    if points.len() < 2 || points.iter().any(|&(_, e)| !(e > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(ScalingSummary { points, slope: sxy / sxx })
}

/// Fraction of `(alpha, run)` cells where the baseline's relative error
/// exceeds the main estimator's.
pub fn baseline_loss_fraction(rows: &[ResultRow], main: &str, baseline: &str) -> Option<f64> {
    let mut cells = 0usize;
    let mut losses = 0usize;
    for m in rows.iter().filter(|r| r.estimator == main) {
        let b = rows.iter().find(|r| r.estimator == baseline && r.alpha == m.alpha && r.run == m.run && r.seed == m.seed)?;
        cells += 1;
        if b.relative_error? > m.relative_error? {
            losses += 1;
        }
    }
    (cells > 0).then(|| losses as f64 / cells as f64)
}

/// Mean estimate per value of `key`, in first-appearance order.
pub fn mean_estimates_by<K: PartialEq + Copy>(rows: &[ResultRow], key: impl Fn(&ResultRow) -> K) -> Vec<(K, f64, f64)> {
    let mut keys: Vec<K> = Vec::new();
    for r in rows {
        let k = key(r);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|k| {
            let sel: Vec<&ResultRow> = rows.iter().filter(|r| key(r) == k).collect();
            let mean = sel.iter().map(|r| r.estimate).sum::<f64>() / sel.len() as f64;
            let exact = sel[0].exact.unwrap_or(f64::NAN);
            (k, mean, exact)
        })
        .collect()
}
