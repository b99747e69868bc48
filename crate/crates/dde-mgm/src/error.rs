//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("series too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at sample {index}, dimension {dim}")]
    NonFinite { index: usize, dim: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no dominant frequency: magnitude spectrum is flat outside the DC bin")]
    NoDominantFrequency,

    #[error("empty model: no observations recorded")]
    EmptyModel,

    #[error("scoring protocol violation: {0}")]
    Protocol(&'static str),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("model file {path}: {reason}")]
    ModelFile { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for parse errors, 3 for
    /// protocol and precondition errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Parse { .. } | Error::ModelFile { .. } => 2,
            _ => 3,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
