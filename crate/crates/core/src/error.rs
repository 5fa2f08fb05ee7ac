//! Error type shared across the toolkit.

use alloc::string::String;

/// Errors raised by construction and evaluation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Distribution parameters violate the kind's invariants.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    /// Quadrature grid construction rejected the request.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    /// Vector lengths do not agree with the grid or sample set.
    #[error("length mismatch: expected {expected}, got {actual} ({context})")]
    LengthMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },
    /// Kernel bandwidth must be strictly positive.
    #[error("bandwidth must be > 0, got {0}")]
    NonPositiveBandwidth(f64),
    /// Scott's rule cannot be applied to a zero-variance sample.
    #[error("zero-variance sample set: Scott's rule undefined")]
    ZeroVariance,
    /// A design vector lies outside the model's design box.
    #[error("design component {index} = {value} outside box [{lower}, {upper}]")]
    OutOfDesignBox {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    /// An uncertain-variable value lies outside a surrogate's fit domain.
    #[error("omega = {omega} outside surrogate fit domain [{lower}, {upper}]; refit the surrogate over a wider range or clamp the sampling law")]
    OmegaOutOfDomain { omega: f64, lower: f64, upper: f64 },
    /// A surrogate model was queried away from the design it was fitted at.
    #[error("surrogate fitted at a different design point (component {index}: {expected} vs {actual}); refit at the query design")]
    SurrogateDesignMismatch {
        index: usize,
        expected: f64,
        actual: f64,
    },
    /// Least-squares system is rank deficient (duplicate abscissae).
    #[error("rank-deficient least-squares fit: {0}")]
    RankDeficientFit(String),
    /// A model evaluation failed for one sample.
    #[error("model evaluation failed at sample {index} (omega = {omega}): {reason}")]
    ModelEval {
        index: usize,
        omega: f64,
        reason: String,
    },
    /// Optimizer or driver configuration violates its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// A run failed mid-flight; the stage and iterate identify where.
    #[error("{stage} failed at iteration {iteration}: {source}")]
    RunFailure {
        stage: &'static str,
        iteration: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
    /// Operation is not defined for the given kind (e.g. tabulated moments).
    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
