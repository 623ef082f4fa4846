use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("line {line}: confidence out of range: {value}")]
    ConfidenceOutOfRange { line: usize, value: f64 },

    #[error("line {line}: duplicate id {id}")]
    DuplicateId { line: usize, id: u64 },

    #[error("empty trace")]
    EmptyTrace,

    #[error("expected a {expected} trace, got {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series has {len} samples, shorter than one window of {window}")]
    SeriesTooShort { len: usize, window: usize },

    #[error("non-positive bandwidth lower bound: mean {mean} - sd {sd}")]
    NonPositiveBandwidth { mean: f64, sd: f64 },

    #[error("full-offload cost is zero; reduction undefined")]
    ZeroBaselineCost,

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether this error stems from invalid configuration rather than bad input data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
