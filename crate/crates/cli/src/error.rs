use std::io;
use std::path::PathBuf;

use gcf_core::flow::FlowError;
use gcf_core::geometry::snapshot::SnapshotError;
use gcf_core::lemma_q::QError;
use gcf_core::soliton::SolveError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 1;
    pub const STEP_FAILURE: u8 = 2;
    pub const NO_CONVERGENCE: u8 = 3;
    pub const LEMMA_VIOLATION: u8 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ConfigRead { path: PathBuf, source: io::Error },
    /// serde_json reports the line and column.
    #[error("config {path}: {source}")]
    ConfigParse { path: PathBuf, source: serde_json::Error },
    #[error("config field `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Snapshot { path: PathBuf, source: SnapshotError },
    #[error(transparent)]
    Flow(FlowError),
    #[error("flow reached max_steps = {max_steps} at t = {t:e} before its stop rule held")]
    FlowNotConverged { max_steps: usize, t: f64 },
    #[error(transparent)]
    Solve(SolveError),
    #[error(transparent)]
    Lemma(#[from] QError),
    #[error("lemma violation: n = {n}, alpha = {alpha}, min Q = {min_q:e} below -{tolerance:e} x scale {scale:e}")]
    LemmaViolation {
        n: usize,
        alpha: f64,
        min_q: f64,
        scale: f64,
        tolerance: f64,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Flow(FlowError::StepFailure { .. } | FlowError::Normalize(_)) => exit::STEP_FAILURE,
            Self::Flow(FlowError::InvalidConfig(_) | FlowError::Sink(_)) => exit::CONFIG,
            Self::FlowNotConverged { .. } => exit::NO_CONVERGENCE,
            Self::Solve(SolveError::NoConvergence { .. }) => exit::NO_CONVERGENCE,
            Self::Solve(SolveError::Convexity { .. }) => exit::STEP_FAILURE,
            Self::Solve(_) => exit::CONFIG,
            Self::LemmaViolation { .. } => exit::LEMMA_VIOLATION,
            Self::ConfigRead { .. }
            | Self::ConfigParse { .. }
            | Self::ConfigInvalid { .. }
            | Self::Argument(_)
            | Self::Io { .. }
            | Self::Snapshot { .. }
            | Self::Lemma(_) => exit::CONFIG,
        }
    }
}

pub fn io_at(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
