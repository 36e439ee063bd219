use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use renyi_harness::config::{ComplexityGrid, EmbeddingSettings};
use renyi_harness::experiments::{
    baseline_loss_fraction, mean_estimates_by, run_complexity_table, run_experiment, scaling_summary,
};
use renyi_harness::results::write_complexity_rows;
use renyi_harness::{write_rows, ExperimentConfig, ExperimentId, HarnessError, ResultRow, RunOptions};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "renyi", version, about = "Variational Rényi divergence estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate R_α(Q‖P) for a pair (gaussian-1d by default, or embedding).
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Push the 4-dim base Gaussian pair through a random map to this many dimensions.
        #[arg(long)]
        embed_dim: Option<usize>,
        /// Run the full 5000-dimensional embedding experiment (20000 steps, hours of compute).
        #[arg(long)]
        full_scale: bool,
    },
    /// Rényi mutual information of correlated Gaussian blocks over a ρ grid.
    Mi {
        #[command(flatten)]
        common: Common,
        /// Comma-separated correlations.
        #[arg(long, value_delimiter = ',')]
        rho: Option<Vec<f64>>,
        #[arg(long)]
        block_dim: Option<usize>,
    },
    /// Beta products: exponential-family critic against a small MLP.
    Expfam {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Relative error against the number of samples.
    Scaling {
        #[command(flatten)]
        common: Common,
        /// Comma-separated ascending sample sizes.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
    },
    /// Sufficient sample sizes over an (ε, δ) grid.
    Complexity {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        epsilon: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        delta: Option<Vec<f64>>,
        #[arg(long)]
        d_k: Option<u64>,
        #[arg(long)]
        k_k: Option<f64>,
        #[arg(long)]
        l_k: Option<f64>,
        #[arg(long)]
        m_k: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated Rényi orders.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Record per-run wall time in the CSV.
    #[arg(long)]
    timing: bool,
}

fn load(common: &Common, default: ExperimentConfig, allowed: &[ExperimentId]) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => default,
    };
    if !allowed.contains(&cfg.experiment) {
        let names: Vec<_> = allowed.iter().map(|e| e.as_str()).collect();
        return Err(HarnessError::Config(format!(
            "this subcommand runs {}, but the config is for {}",
            names.join(" or "),
            cfg.experiment
        )));
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(alphas) = &common.alpha {
        cfg.alphas = alphas.clone();
    }
    if let Some(r) = common.repetitions {
        cfg.repetitions = r;
    }
    if let Some(train) = cfg.train.as_mut() {
        if let Some(s) = common.steps {
            train.steps = s;
        }
        if let Some(b) = common.batch {
            train.minibatch = b;
        }
    }
    Ok(cfg)
}

fn output(common: &Common, cfg: &ExperimentConfig) -> Option<PathBuf> {
    common.out.clone().or_else(|| cfg.output.clone())
}

fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<(), HarnessError>) -> Result<(), HarnessError> {
    match path {
        Some(p) => {
            let mut file = std::fs::File::create(p).map_err(|e| HarnessError::Io { path: p.to_path_buf(), source: e })?;
            f(&mut file)
        }
        None => f(&mut std::io::stdout().lock()),
    }
}

/// One JSON line on stderr describing what was run.
fn report(cfg: &ExperimentConfig, rows: &[ResultRow]) {
    let mut summary = json!({
        "experiment": cfg.experiment.as_str(),
        "rows": rows.len(),
        "non_converged": rows.iter().filter(|r| !r.converged).count(),
    });
    match cfg.experiment {
        ExperimentId::NScaling => {
            if let Some(s) = scaling_summary(rows) {
                summary["mean_relative_error"] = json!(s.points);
                summary["log_log_slope"] = json!(s.slope);
            }
        }
        ExperimentId::MiSweep => {
            let per_rho = mean_estimates_by(rows, |r| r.rho.unwrap_or(f64::NAN).to_bits());
            let per_rho: Vec<_> = per_rho.iter().map(|(k, m, e)| json!([f64::from_bits(*k), m, e])).collect();
            summary["mean_estimate_by_rho"] = json!(per_rho);
        }
        ExperimentId::BetaExpFam => {
            if let (Some(train), Some(beta)) = (&cfg.train, &cfg.beta) {
                if let Some(b) = &beta.baseline {
                    summary["baseline_worse_fraction"] =
                        json!(baseline_loss_fraction(rows, &train.critic.label(), &b.label()));
                }
            }
        }
        _ => {
            let per_alpha = mean_estimates_by(rows, |r| r.alpha.to_bits());
            let per_alpha: Vec<_> = per_alpha.iter().map(|(k, m, e)| json!([f64::from_bits(*k), m, e])).collect();
            summary["mean_estimate_by_alpha"] = json!(per_alpha);
        }
    }
    eprintln!("{summary}");
}

fn run_rows(common: &Common, cfg: ExperimentConfig) -> Result<(), HarnessError> {
    let rows = run_experiment(&cfg, RunOptions { timing: common.timing })?;
    emit(output(common, &cfg).as_deref(), |w| write_rows(&rows, w))?;
    report(&cfg, &rows);
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Estimate { common, embed_dim, full_scale } => {
            let default = if full_scale {
                ExperimentConfig::full_scale_embedding()
            } else if embed_dim.is_some() {
                ExperimentConfig::preset(ExperimentId::Embedding)
            } else {
                ExperimentConfig::preset(ExperimentId::Gaussian1d)
            };
            let mut cfg = load(&common, default, &[ExperimentId::Gaussian1d, ExperimentId::Embedding])?;
            if let Some(d) = embed_dim {
                let seed = cfg.embedding.as_ref().and_then(|e| e.seed);
                cfg.experiment = ExperimentId::Embedding;
                cfg.embedding = Some(EmbeddingSettings { output_dim: d, seed, full_scale });
            }
            run_rows(&common, cfg)
        }
        Command::Mi { common, rho, block_dim } => {
            let mut cfg = load(&common, ExperimentConfig::preset(ExperimentId::MiSweep), &[ExperimentId::MiSweep])?;
            if let Some(r) = rho {
                cfg.rhos = r;
            }
            if let Some(d) = block_dim {
                cfg.block_dim = d;
            }
            run_rows(&common, cfg)
        }
        Command::Expfam { common, dim } => {
            let mut cfg =
                load(&common, ExperimentConfig::preset(ExperimentId::BetaExpFam), &[ExperimentId::BetaExpFam])?;
            if let (Some(d), Some(beta)) = (dim, cfg.beta.as_mut()) {
                beta.dim = d;
            }
            run_rows(&common, cfg)
        }
        Command::Scaling { common, n_list } => {
            let mut cfg = load(&common, ExperimentConfig::preset(ExperimentId::NScaling), &[ExperimentId::NScaling])?;
            if let Some(n) = n_list {
                cfg.n_list = n;
            }
            run_rows(&common, cfg)
        }
        Command::Complexity { common, epsilon, delta, d_k, k_k, l_k, m_k } => {
            let mut cfg = load(
                &common,
                ExperimentConfig::preset(ExperimentId::ComplexityTable),
                &[ExperimentId::ComplexityTable],
            )?;
            let grid: &mut ComplexityGrid = cfg.complexity.get_or_insert_with(|| ComplexityGrid {
                epsilons: Vec::new(),
                deltas: Vec::new(),
                d_k: 10,
                k_k: 1.0,
                l_k: 1.0,
                m_k: 1.0,
            });
            if let Some(e) = epsilon {
                grid.epsilons = e;
            }
            if let Some(d) = delta {
                grid.deltas = d;
            }
            grid.d_k = d_k.unwrap_or(grid.d_k);
            grid.k_k = k_k.unwrap_or(grid.k_k);
            grid.l_k = l_k.unwrap_or(grid.l_k);
            grid.m_k = m_k.unwrap_or(grid.m_k);
            let rows = run_complexity_table(&cfg)?;
            emit(output(&common, &cfg).as_deref(), |w| write_complexity_rows(&rows, w))
        }
    }
}

fn error_line(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            ExitCode::from(if matches!(e, HarnessError::Config(_)) { 2 } else { 1 })
        }
    }
}
