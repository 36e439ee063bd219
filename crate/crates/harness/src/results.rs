//! Result rows and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const RESULT_HEADER: [&str; 12] = [
    "experiment",
    "estimator",
    "alpha",
    "rho",
    "n_samples",
    "run",
    "seed",
    "estimate",
    "exact",
    "relative_error",
    "converged",
    "wall_time_s",
];

/// One estimator run. Optional fields are empty cells in the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    /// Critic label such as `mlp[32]` or `expfam[beta]`.
    pub estimator: String,
    pub alpha: f64,
    pub rho: Option<f64>,
    pub n_samples: usize,
    pub run: usize,
    /// Seed of this run; with the config it reproduces the estimate.
    pub seed: u64,
    pub estimate: f64,
    pub exact: Option<f64>,
    pub relative_error: Option<f64>,
    pub converged: bool,
    /// Only filled when timing is requested, so default output is reproducible.
    pub wall_time_s: Option<f64>,
}

/// `|estimate − exact| / |exact|`, or the absolute error when `exact` is 0.
pub fn relative_error(estimate: f64, exact: f64) -> f64 {
    let err = (estimate - exact).abs();
    if exact == 0.0 {
        err
    } else {
        err / exact.abs()
    }
}

pub fn write_rows<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wr.write_record(RESULT_HEADER)?;
    }
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn rows_to_csv(rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_rows(rows, &mut buf)?;
    Ok(buf)
}

pub fn read_rows<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    if headers.iter().ne(RESULT_HEADER) {
        return Err(crate::HarnessError::Config(format!(
            "result CSV header must be {}, got {}",
            RESULT_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// One cell of the sample-complexity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub d_k: u64,
    pub k_k: f64,
    pub l_k: f64,
    pub m_k: f64,
    /// Natural log of the real threshold.
    pub log_n: f64,
    /// `⌈threshold⌉`; empty when astronomically large.
    pub samples: Option<u64>,
    pub astronomically_large: bool,
}

pub fn write_complexity_rows<W: Write>(rows: &[ComplexityRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}
