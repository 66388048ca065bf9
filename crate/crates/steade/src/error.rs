//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any part of the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A search-space definition violated an invariant.
    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),

    /// A configuration referenced a parameter the space does not define.
    #[error("unknown parameter: {0}")]
    UnknownParameter(String),

    /// A native value fell outside its parameter's bounds or categories.
    #[error("value out of bounds for parameter {name}: {detail}")]
    OutOfBounds { name: String, detail: String },

    /// Vector length did not match the expected dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A cube coordinate left [0, 1] by more than the decoding tolerance.
    #[error("cube coordinate {index} = {value} outside [0, 1]")]
    CubeCoordinateOutOfRange { index: usize, value: f64 },

    /// Not enough points for a well-posed surrogate fit.
    #[error("need at least {needed} points, got {got}")]
    NotEnoughPoints { needed: usize, got: usize },

    /// Surrogate training points too close together or otherwise degenerate.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Matrix factorization failed even after jitter escalation.
    #[error("factorization failed: {0}")]
    FactorizationFailed(String),

    /// An invalid optimizer or sampler configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Sobol sample counts must be powers of two.
    #[error("sample count {0} is not a power of two")]
    NotPowerOfTwo(usize),

    /// Fewer candidates than requested selections.
    #[error("requested {requested} selections from {available} candidates")]
    InsufficientCandidates { requested: usize, available: usize },

    /// The suggest/observe alternation contract was violated.
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    /// The evaluation budget is exhausted.
    #[error("evaluation budget exhausted after {0} iterations")]
    BudgetExhausted(usize),

    /// best() called before any observation.
    #[error("no observations recorded yet")]
    NoObservations,

    /// Benchmark-level errors (unknown problem, mixed budgets, ...).
    #[error("benchmark error: {0}")]
    Benchmark(String),

    /// Failed to parse an external document (space JSON, records, ...).
    #[error("parse error: {0}")]
    Parse(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
