use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coefficients (f, g) = ({f}, {g}) exceed the cap {cap}")]
    CapExceeded { f: f64, g: f64, cap: f64 },

    #[error("quadrature under-resolved: field `{field}` differs by {diff:e} between schemes")]
    QuadratureUnderresolved { field: &'static str, diff: f64 },

    #[error("order parameters (u, v) = ({u}, {v}) lie outside the physical region")]
    OutOfPhysicalRegion { u: f64, v: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invariant `{invariant}` violated at node {index} (r = {r})")]
    InvariantViolation {
        invariant: String,
        index: usize,
        r: f64,
    },

    #[error("no negative direction found: {0}")]
    NotFound(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
