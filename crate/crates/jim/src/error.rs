//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum JimError {
    /// A parameter or argument violates a model precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A point sequence is not strictly increasing in time or is otherwise malformed.
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    /// The process is unstable: Spr(MIC) >= 1.
    #[error("unstable model: spectral radius {spectral_radius} >= 1")]
    Unstable { spectral_radius: f64 },

    /// A numerical operation failed (non-finite likelihood, convergence failure, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A pipeline step produced no output (e.g. no query cleared the similarity threshold).
    #[error("empty result: {0}")]
    EmptyResult(String),

    /// Not enough data to carry out an estimation step.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A configuration value is inconsistent or out of range.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input file could not be parsed.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl JimError {
    /// Process exit code for the CLI: 2 input/parse, 3 numerical/stability, 4 empty-result.
    pub fn exit_code(&self) -> i32 {
        match self {
            JimError::Io { .. } | JimError::Parse { .. } | JimError::Config(_) => 2,
            JimError::InvalidParameter(_) | JimError::InvalidSequence(_) => 2,
            JimError::Unstable { .. } | JimError::Numerical(_) | JimError::InsufficientData(_) => 3,
            JimError::EmptyResult(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, JimError>;
