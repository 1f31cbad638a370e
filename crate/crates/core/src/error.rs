use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("uncalibrated model: run calibration before detection")]
    Uncalibrated,

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Coarse classification used by front ends to choose exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Parse { .. } => ErrorKind::Io,
            Error::InvalidParameter(_) | Error::Schema(_) | Error::Uncalibrated => ErrorKind::Usage,
            Error::EmptyInput
            | Error::DimensionMismatch { .. }
            | Error::NonFinite(_)
            | Error::Numerical(_) => ErrorKind::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Io,
    Numerical,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
