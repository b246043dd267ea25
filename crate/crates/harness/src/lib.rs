//! Reproducible experiment drivers for the DyLoC benchmark: configuration,
//! seed splitting, CSV and manifest emission, plot data, and the DLA report.

pub mod config;
pub mod output;
pub mod plot;
pub mod run;

use std::path::{Path, PathBuf};

use dyloc_core::attacks::AttackError;
use dyloc_core::dla::DlaError;
use dyloc_core::learn::LearnError;
use dyloc_core::models::ModelError;
use thiserror::Error;

pub use config::{Experiment, ExperimentConfig, SeedSpec, Seeds};
pub use run::run_experiment;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "DYLOC_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unknown preset {0:?} (available: paper-repro)")]
    UnknownPreset(String),
    #[error("{path}: row {row}, column {column}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },
    #[error("{0}: no data rows")]
    EmptyCsv(PathBuf),
    #[error("no plottable CSV files found in {0}")]
    NothingToPlot(PathBuf),
    #[error("bad value for {var}: {value:?}")]
    Env { var: &'static str, value: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Dla(#[from] DlaError),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Caps the global rayon pool from `DYLOC_THREADS`, if set.
pub fn init_thread_pool() -> Result<(), HarnessError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| HarnessError::Env {
            var: THREADS_ENV,
            value: value.clone(),
        })?;
    // Fails only if a global pool already exists, which is harmless here.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}
