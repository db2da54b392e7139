use thiserror::Error;

/// Errors raised by meshing, assembly, solvers and the fractional operator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("solver did not converge after {iters} iterations (relative residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("CFL condition violated: dt = {dt:e} exceeds the stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("time-step count cap of {cap} exceeded")]
    StepCapExceeded { cap: usize },

    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("no sign change of the Robin characteristic function on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("datum trace {value} does not match boundary data {expected} at node {node}")]
    TraceMismatch { node: usize, value: f64, expected: f64 },

    #[error("overflow while raising nodal values to power {0}")]
    Overflow(u32),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
