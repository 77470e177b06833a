use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched spaces, missing substitutions, malformed shapes.
    #[error("structural error: {0}")]
    Structural(String),
    /// A degree or problem size that the builder cannot accommodate.
    #[error("sizing error: {0}")]
    Sizing(String),
    /// Input that violates a documented precondition (negative A entries, eta <= 0, ...).
    #[error("validation error: {0}")]
    Validation(String),
    #[error("sampling failure: {0}")]
    Sampling(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
