use thiserror::Error;

pub type Result<T> = std::result::Result<T, AlasError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlasError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A component oracle or a factorization produced a non-finite or unusable result.
    #[error("numeric failure{}: {what}", index.map(|i| format!(" at component {i}")).unwrap_or_default())]
    NumericFailure { index: Option<usize>, what: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl AlasError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        AlasError::InvalidInput(msg.into())
    }

    pub(crate) fn numeric(what: impl Into<String>) -> Self {
        AlasError::NumericFailure {
            index: None,
            what: what.into(),
        }
    }
}

impl From<std::io::Error> for AlasError {
    fn from(e: std::io::Error) -> Self {
        AlasError::Io(e.to_string())
    }
}
