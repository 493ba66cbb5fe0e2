//! Experiment orchestration: configs, repeated runs, CSV outputs and reports.

mod config;
mod experiment;
mod report;
mod trace_file;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{parse_config, parse_w, ExperimentSpec, InstanceSource, TraceMode, Variant};
pub use experiment::{
    compute_experiment, load_instance, run_experiment, solve_optimum, write_outputs, AggregateResult, ExperimentResult,
    RunSummary, AGGREGATE_COLUMNS, DP_MEMORY_BUDGET, RUN_COLUMNS,
};
pub use report::{read_aggregate, write_report, write_trace_metrics, ReportRow, TraceMetricsOutput, REPORT_COLUMNS};
pub use trace_file::{load_trace, read_trace, save_trace, write_trace};

use crate::engine::EngineError;
use crate::knapsack::KnapsackError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config line {line}, key `{key}`: {message}")]
    Parse { line: usize, key: String, message: String },
    #[error("{0}")]
    Config(String),
    #[error("DP table needs {required_bytes} bytes, budget is {budget_bytes}")]
    Resource { required_bytes: u128, budget_bytes: u128 },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {source}", path.display())]
    Instance {
        path: PathBuf,
        #[source]
        source: KnapsackError,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Knapsack(#[from] KnapsackError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl HarnessError {
    pub(crate) fn parse(line: usize, key: &str, message: String) -> Self {
        Self::Parse {
            line,
            key: key.to_string(),
            message,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn csv(path: &Path, source: csv::Error) -> Self {
        Self::Csv {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Errors caused by the user's input rather than by the run itself.
    pub fn is_usage(&self) -> bool {
        matches!(self, Self::Parse { .. })
    }
}

/// Reads and parses a config file, resolving relative paths against its directory.
pub fn load_config(path: &Path) -> Result<ExperimentSpec, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut spec = parse_config(&text)?;
    spec.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(spec)
}
