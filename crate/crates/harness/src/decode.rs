//! Byte-level entry points for every input format the harness reads. Each
//! returns an error on malformed input and never panics; the fuzz targets
//! call these directly.

use renyi_core::critics::AnyCritic;
use renyi_core::measures::Distribution;
use renyi_core::trainer::{EstimateTrace, TraceRecord};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::results::{read_rows, ResultRow};

fn utf8(data: &[u8]) -> Result<&str> {
    std::str::from_utf8(data).map_err(|e| HarnessError::Config(format!("input is not UTF-8: {e}")))
}

/// An experiment config, validated.
pub fn decode_config(data: &[u8]) -> Result<ExperimentConfig> {
    ExperimentConfig::from_json(utf8(data)?)
}

/// A distribution spec as it appears in the `q` and `p` fields of a config.
pub fn decode_distribution(data: &[u8]) -> Result<Distribution> {
    Ok(serde_json::from_slice(data)?)
}

/// A critic checkpoint.
pub fn decode_checkpoint(data: &[u8]) -> Result<AnyCritic> {
    Ok(AnyCritic::from_checkpoint_json(utf8(data)?)?)
}

/// A results CSV.
pub fn decode_results_csv(data: &[u8]) -> Result<Vec<ResultRow>> {
    read_rows(data)
}

/// A training-trace CSV.
pub fn decode_trace_csv(data: &[u8]) -> Result<Vec<TraceRecord>> {
    Ok(EstimateTrace::read_csv_records(data)?)
}
