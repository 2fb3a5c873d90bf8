use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("degenerate tour: {0} cities, at least 3 required")]
    DegenerateTour(usize),

    #[error("invalid solution: {0}")]
    InvalidSolution(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("tables belong to different sample sets")]
    SampleSetMismatch,

    #[error("problem fingerprint mismatch: file was written for a different problem")]
    ProblemMismatch,

    #[error("corrupt container: {0}")]
    Corrupt(String),

    #[error("graph invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
