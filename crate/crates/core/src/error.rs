use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The ideal Bose gas would condense at the requested density.
    #[error("density {rho} is not below the critical density {critical} (Bose condensation)")]
    Condensation { rho: f64, critical: f64 },

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: estimated error {achieved:e} exceeds tolerance {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    /// Two independent evaluation routes disagree beyond the consistency bound.
    #[error("consistency check failed: {0}")]
    Consistency(String),

    /// A finite truncation (mode cutoff, Fock-space cap) is too small.
    #[error("truncation error: {0}")]
    Truncation(String),

    /// Internal failure of an iterative procedure (e.g. root bracketing).
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
