use thiserror::Error;

/// Errors raised by the solvers, the distribution constructors and the
/// simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// `u * tail(u)` has no finite maximizer for the requested offset.
    #[error("objective (u - {offset}) * tail(u) has no finite maximizer")]
    NonFiniteObjective { offset: f64 },

    #[error("value {value} outside the invertible range [{lo}, {hi}] of m")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("Laplace-Stieltjes transform degenerates at s = {s} (phi = {phi})")]
    DegenerateTransform { s: f64, phi: f64 },

    #[error("adaptive quadrature stopped at estimated error {error:e} (tolerance {tolerance:e})")]
    QuadratureFailure { error: f64, tolerance: f64 },

    #[error("uniform revenue keeps improving up to the search limit p = {limit}")]
    NoFiniteMaximizer { limit: f64 },

    #[error("fixed-point bracket collapsed: lower {lower} exceeds upper {upper}")]
    BracketCollapse { lower: f64, upper: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// `h(theta)` never changed sign on the scanned interval; `trace` holds the
    /// scanned `(theta, h(theta))` pairs (infeasible points carry `NaN`).
    #[error("no sign change of h(theta) on [0, {upper}]")]
    NoRootInBracket { upper: f64, trace: Vec<(f64, f64)> },

    #[error("embedded chain is singular on its reachable states")]
    SingularChain,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}
