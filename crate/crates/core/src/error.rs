use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("index {index} out of range for {len} entries")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("entry {index} has no duals and is outside the domain of the operator")]
    NotInDomain { index: usize },

    #[error("dual selection count {size} exceeds the selection cap {cap}")]
    SelectionCapExceeded { cap: u64, size: u64 },

    #[error("projection target set is empty")]
    EmptyTarget,

    #[error("projection did not converge after {iterations} iterations")]
    ProjectionStalled { iterations: usize },

    #[error("pair is not a monotonicity violation (delta = {delta:e})")]
    NotAViolation { delta: f64 },

    #[error("pair points coincide")]
    CoincidentPoints,

    #[error("constructive intersection search stopped at f = {f:e} after {iterations} iterations")]
    FipNotConverged { f: f64, iterations: usize },

    #[error("leave-one-out subsystem {subset:?} has empty intersection (f = {f:e})")]
    FipInvariantBreach { subset: Vec<usize>, f: f64 },

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("pairwise verdict and MVI probes disagree: {0}")]
    InconsistentClassification(String),

    #[error("internal solver error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
