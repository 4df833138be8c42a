use thiserror::Error;

/// Errors raised by the design library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("candidate {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("candidate {index} has a non-finite coordinate")]
    NonFiniteCoordinate { index: usize },

    #[error("candidates {first} and {second} are duplicates")]
    DuplicateCandidates { first: usize, second: usize },

    #[error("invalid kernel parameter: {0}")]
    InvalidKernel(String),

    #[error("kernel not PSD: eigenvalue {value:e} is below tolerance")]
    NotPsd { value: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("conditioning failed: selected block is singular even after jitter")]
    ConditioningFailed,

    #[error("cardinality {n} is not feasible for a set of size {available}")]
    Cardinality { n: usize, available: usize },

    #[error("negative weight {0:e} where a nonnegative value is required")]
    NegativeWeight(f64),

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("repeated index {0}")]
    RepeatedIndex(usize),

    #[error("projection sampler degenerated at step {step}: all weights below threshold")]
    DegenerateSampler { step: usize },

    #[error("batch {batch}: {needed} points requested but only {available} candidates remain")]
    Capacity {
        batch: usize,
        needed: usize,
        available: usize,
    },

    #[error("sequential state inconsistent: {0}")]
    InvalidState(String),

    #[error("statistic undefined: {0}")]
    UndefinedStatistic(String),

    #[error("batches do not partition the data: {0}")]
    InvalidPartition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for DesignError {
    fn from(e: std::io::Error) -> Self {
        DesignError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DesignError>;
