use thiserror::Error;

/// Errors raised by kernel evaluation, potentials, the fixed-point solver and
/// the finite-difference oracle.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Result not representable in double precision.
    #[error("range error: {0}")]
    Range(String),

    /// A quadrature or inversion could not reach the requested tolerance.
    #[error("accuracy error: {what} (achieved error estimate {estimate:e})")]
    Accuracy { what: String, estimate: f64 },

    /// Caller supplied inconsistent or unusable configuration.
    #[error("usage error: {0}")]
    Usage(String),

    /// Fixed-point iteration did not reach tolerance.
    #[error("convergence error after {iterations} iterations (difference history {history:?})")]
    Convergence {
        iterations: usize,
        history: Vec<f64>,
    },

    /// A post-condition check failed (junction gap, bound violation).
    #[error("consistency error: {0}")]
    Consistency(String),

    /// Right-hand side evaluation failed at a specific point.
    #[error("evaluation error at x={x}, t={t}: {message}")]
    Evaluation { x: f64, t: f64, message: String },

    /// The finite-difference oracle blew up.
    #[error("divergence error: {0}")]
    Divergence(String),

    /// Richardson certification of the oracle failed.
    #[error("certification error: {0}")]
    Certification(String),
}

pub type Result<T> = std::result::Result<T, Error>;
