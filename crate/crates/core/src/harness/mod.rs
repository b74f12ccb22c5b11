//! Experiment configuration, replica orchestration, artifact files and
//! verification reports.

mod config;
mod experiment;
mod overlay;
mod verify;

use std::path::PathBuf;

pub use config::{ConfigError, ExperimentConfig, TriangleSpec, DEFAULT_SUPPORT_FLOOR, DEFAULT_TOLERANCE};
pub use experiment::{
    final_path, run_experiment, simulate_replica, snapshots_path, thread_count, FinalState, ReplicaResult, SUMMARY_FILE,
};
pub use overlay::{harmonic, report_flow_overlay, write_overlay_csv, OverlayReport, OverlayRow};
pub use verify::{median, verify_replicas, verify_theorem, EdgeCheck, SeedReport, VerificationReport};

use crate::ants::AntsError;
use crate::theory::TheoryError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ants(#[from] AntsError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}
