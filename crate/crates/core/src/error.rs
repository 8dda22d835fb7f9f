use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bad input shape: {0}")]
    BadShape(String),

    #[error("observation index {index} out of range for state dimension {dim}")]
    BadObservation { index: usize, dim: usize },

    #[error("invalid observation spec: {0}")]
    InvalidObservation(String),

    #[error("insufficient data: need {required} samples, have {available}")]
    InsufficientData { required: usize, available: usize },

    #[error("integration diverged at step {step}")]
    IntegrationDiverged { step: usize },

    #[error("rollout diverged at step {step}")]
    RolloutDiverged { step: usize },

    #[error("training diverged at epoch {epoch}, batch {batch}")]
    TrainingDiverged { epoch: usize, batch: usize },

    #[error("series has zero variance")]
    ConstantSeries,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("no valid nearest-neighbour pairs")]
    NoNeighbors,

    #[error("reports are not comparable: {0}")]
    IncomparableReports(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("upstream artifact missing: {}", .0.display())]
    UpstreamMissing(PathBuf),

    #[error("stale artifact {}: fingerprint {found} does not match manifest {expected}", .path.display())]
    StaleArtifact { path: PathBuf, expected: String, found: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
