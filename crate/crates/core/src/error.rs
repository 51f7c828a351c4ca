use thiserror::Error;

use crate::grid::io::FieldIoError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// Two fields (or a field and a vector) do not live on compatible grids.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// A domain object violates one of its construction invariants.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    FieldIo(#[from] FieldIoError),

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("optimality-criteria bisection failed after {iterations} iterations (volume {volume:.6e}, target {target:.6e})")]
    Bisection {
        iterations: usize,
        volume: f64,
        target: f64,
    },

    #[error("non-finite value produced at optimization iteration {iteration}")]
    NonFinite { iteration: usize },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
