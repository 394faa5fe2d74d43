//! Experiment harness: configuration, diagnostics streams, sweeps and the self-check suite.

pub mod check;
pub mod config;
pub mod diagnostics;
pub mod experiment;
pub mod sweep;

use thiserror::Error;

use crate::kahler::snapshot::SnapshotError;

pub use check::{run_checks, CheckResult};
pub use config::{ExperimentConfig, Mode};
pub use diagnostics::{validate_record, JsonlWriter};
pub use experiment::{evaluate_snapshot, run_experiment, ExperimentOutcome, RunSummary};
pub use sweep::{run_sweep, SweepCell};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config: {0}")]
    Config(String),
    #[error("io on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("snapshot: {0}")]
    Snapshot(#[from] SnapshotError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] crate::Error),
    #[error("{failed} of {total} self-checks failed")]
    CheckFailed { failed: usize, total: usize },
}

impl LabError {
    /// Process exit code: 1 configuration, 2 numerical failure, 3 self-check failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Io { .. } | LabError::Snapshot(_) => 1,
            LabError::Numerical(crate::Error::InvalidFlowConfig(_)) => 1,
            LabError::Numerical(_) => 2,
            LabError::CheckFailed { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        LabError::Io { path: path.as_ref().display().to_string(), source }
    }
}
