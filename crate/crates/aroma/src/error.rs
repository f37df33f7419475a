use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Two structures cannot be merged (different mode, size, or seed).
    #[error("incompatible structures: {0}")]
    Incompatible(String),

    /// An estimator was applied to a sample of the wrong mode.
    #[error("wrong sample mode: {0}")]
    WrongMode(String),

    /// The operation needs a non-empty sample.
    #[error("empty sample")]
    EmptySample,

    /// A serialized blob or trace file is malformed.
    #[error("malformed data: {0}")]
    Format(String),

    /// The structure must be finalized before this query.
    #[error("structure not finalized")]
    NotFinalized,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
