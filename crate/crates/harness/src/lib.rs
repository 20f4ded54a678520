//! Experiment orchestration: sweeps, repeated runs, statistics and file
//! export on top of `rmoqpso-core`.

pub mod export;
pub mod runs;
pub mod stats;
pub mod sweep;

use std::path::Path;

use rmoqpso_core::benchmarks::{builtin, load_model, BenchmarkError, BenchmarkSpec};
use rmoqpso_core::optim::OptimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("sweep plan has an empty grid")]
    EmptyGrid,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Process exit code: 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::EmptyGrid | HarnessError::Json(_) => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Io(_) | HarnessError::Csv(_) => 1,
        }
    }
}

impl From<OptimError> for HarnessError {
    fn from(e: OptimError) -> Self {
        match e {
            OptimError::NoFeasibleDonors | OptimError::DegenerateDraw => HarnessError::Numerical(e.to_string()),
            other => HarnessError::Config(other.to_string()),
        }
    }
}

impl From<BenchmarkError> for HarnessError {
    fn from(e: BenchmarkError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

/// Built-in name (`pendulum`, `flight`) or path to a model document.
pub fn resolve_benchmark(name: &str) -> Result<BenchmarkSpec, HarnessError> {
    if let Some(b) = builtin(name) {
        return Ok(b);
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(HarnessError::Config(format!("unknown benchmark {name:?}")));
    }
    let text = std::fs::read_to_string(path)?;
    let loaded = load_model(&text)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded.spec)
}
