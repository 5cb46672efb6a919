use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {dim}: need at least {min}")]
    InvalidDimension { dim: usize, min: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("truncation loss {loss:.3e} exceeds tolerance {tolerance:.1e} ({context})")]
    Truncation { loss: f64, tolerance: f64, context: String },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("impossible evidence: likelihood vanishes on the whole posterior support")]
    ImpossibleEvidence,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
