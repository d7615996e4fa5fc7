use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range (size {bound})")]
    OutOfRange { index: usize, bound: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("empty sample")]
    EmptySample,

    #[error("infeasible packing: {0}")]
    InfeasiblePacking(String),

    #[error("privacy constraint violated: {0}")]
    ConstraintViolated(String),

    #[error("zero posterior denominator at output {y}")]
    ZeroPosterior { y: usize },

    #[error("enumeration of {members} members exceeds the cap of {cap}; use sampling")]
    EnumerationTooLarge { members: u64, cap: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("ingest: {0}")]
    Ingest(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::SizeMismatch { expected, actual });
    }
    Ok(())
}

pub(crate) fn check_index(index: usize, bound: usize) -> Result<()> {
    if index >= bound {
        return Err(Error::OutOfRange { index, bound });
    }
    Ok(())
}
