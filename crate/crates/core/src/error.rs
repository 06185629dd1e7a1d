use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index out of range: {what} {index} (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("duplicate position in delta: {0}")]
    DuplicatePosition(String),

    /// A zero row whose right-hand side is negative can never be satisfied.
    #[error("malformed problem: constraint row {row} has zero norm and is violated")]
    MalformedProblem { row: usize },

    #[error("problem too large for the oracle: {0}")]
    SizeGuard(String),

    #[error("feasible region is empty")]
    Infeasible,

    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("worker {worker} failed: {message}")]
    Worker { worker: usize, message: String },

    #[error("barrier violated: evaluated with {received} of {expected} results")]
    Barrier { received: usize, expected: usize },
}
