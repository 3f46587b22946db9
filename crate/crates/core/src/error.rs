//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the exact core and the scenario layer.
#[derive(Debug, Error)]
pub enum Error {
    /// Market data violates a structural invariant (shape mismatch,
    /// negative value, non-convex cost curve, ...).
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// A query left the mathematical domain of an operation, e.g. cost
    /// evaluation past a hard budget where the curve is undefined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A tie-break schedule references goods or buyers that are not
    /// actually tied, or assigns shares outside [0, 1].
    #[error("tie-break mismatch: {0}")]
    TieBreak(String),

    /// An enumeration request exceeds the size guard.
    #[error("size guard: {0}")]
    SizeGuard(String),

    /// Scenario JSON could not be parsed into a market instance.
    #[error("scenario parse error: {0}")]
    Parse(String),

    /// Linear program solver failed (unbounded or structurally infeasible).
    #[error("linear program error: {0}")]
    LinearProgram(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInstance(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
