use thiserror::Error;

/// Errors raised by state construction, oracle queries and the certification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("qubit index {qubit} out of range for a {n}-qubit register")]
    QubitOutOfRange { qubit: usize, n: usize },

    #[error("qubit count mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("amplitude vector length {0} is not a power of two")]
    InvalidLength(usize),

    #[error("vector is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("non-finite amplitude or coordinate")]
    NonFinite,

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid single-qubit basis: {0}")]
    InvalidBasis(String),

    #[error("invalid product-projector query: {0}")]
    InvalidQuery(String),

    #[error("branch has vanishing probability mass {mass:e}")]
    DegenerateBranch { mass: f64 },

    #[error("{what} of {requested} exceeds the configured limit {limit}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("claim violated: {0}")]
    ClaimViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
