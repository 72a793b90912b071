use thiserror::Error;

/// Errors produced by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{a} is not invertible modulo {c}")]
    NotInvertible { a: u64, c: u64 },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("modulus {c} exceeds the factor table limit {limit}")]
    ModulusOutOfRange { c: u64, limit: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn quadrature(msg: impl Into<String>) -> Self {
        Error::QuadratureFailure(msg.into())
    }
}
