//! Crate-wide error type and process exit-code mapping.

use std::path::PathBuf;

/// Every fallible operation in this crate returns this error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A required dataset file does not exist.
    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    /// A dataset file exists but its contents violate the TU format.
    #[error("malformed dataset: {0}")]
    MalformedDataset(String),

    /// A vertex label is not present in the encoding alphabet.
    #[error("unknown vertex label: {0}")]
    UnknownLabel(i64),

    /// A vertex index is outside a graph's vertex range.
    #[error("vertex index {index} out of range (vertex count {bound})")]
    IndexError { index: usize, bound: usize },

    /// An operation received an empty collection it cannot work on.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// An argument violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Training or clustering produced a non-finite value.
    #[error("numerical error: {0}")]
    NumericalError(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) => 1,
            Error::NumericalError(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
