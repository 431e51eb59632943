use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("insufficient candidates: need {needed}, have {available}")]
    InsufficientCandidates { needed: usize, available: usize },

    #[error("empty window")]
    EmptyWindow,

    #[error("window of {len} mini-slots is shorter than history + horizon = {needed}")]
    WindowTooShort { len: usize, needed: usize },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("non-finite loss{}; try lowering the learning rate", user.map(|u| format!(" at user {u}")).unwrap_or_default())]
    NonFiniteLoss { user: Option<usize> },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable tag used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid_dimension",
            Error::InsufficientCandidates { .. } => "insufficient_candidates",
            Error::EmptyWindow => "empty_window",
            Error::WindowTooShort { .. } => "window_too_short",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
