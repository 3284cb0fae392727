use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoleError {
    #[error("evaluation budget of {budget} exhausted")]
    BudgetExhausted { budget: u64 },

    #[error("point violates box bounds in coordinate {index}: {value} not in [{lower}, {upper}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("objective evaluation returned a non-finite value at {point:?}")]
    NonFiniteObjective { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("no box bounds and no fallback box available")]
    MissingBounds,

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("node cannot be placed without breaking the set ordering")]
    OrderingViolation,

    #[error("pair is not mutually nondominating")]
    NotComparablePair,

    #[error("iteration cap of {0} reached")]
    IterationCap(usize),

    #[error("post-processing made no progress")]
    StalledRefinement,
}

pub type Result<T> = std::result::Result<T, MoleError>;
