use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error(
        "infeasible label skew: class {class} is demanded {demanded} samples but only {available} are available"
    )]
    InfeasibleSkew {
        class: usize,
        demanded: usize,
        available: usize,
    },

    #[error("class {class} has {available} samples but no client is assigned that class")]
    UnownedClass { class: usize, available: usize },

    #[error("{}: file not found", .0.display())]
    NotFound(PathBuf),

    #[error("row {row}: {message}")]
    MalformedRow { row: u64, message: String },

    #[error("row {row}: label {value:?} is not a non-negative integer")]
    InvalidLabel { row: u64, value: String },

    #[error("unknown client id {0}")]
    UnknownClient(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
