use thiserror::Error;

/// Errors produced by the k-opt engine and its file readers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid tour: {0}")]
    InvalidTour(String),

    #[error("weight magnitude {0} exceeds the overflow guard 2^40")]
    WeightOverflow(i64),

    #[error("k = {k} outside the supported range {min}..={max}")]
    KOutOfRange { k: usize, min: usize, max: usize },

    #[error("instance too small: n = {n} but k = {k} needs n >= {need}")]
    InstanceTooSmall { n: usize, k: usize, need: usize },

    #[error("alpha = {0} is outside [0, 1]")]
    AlphaOutOfRange(String),

    #[error("degenerate move: {0}")]
    DegenerateMove(String),

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("search budget exceeded: {needed} candidates > budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
