use thiserror::Error;

/// Errors raised by parameter validation and the numerical pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unstable queue: arrival rate {lambda} must be below the high service rate {mu1}")]
    Stability { lambda: f64, mu1: f64 },

    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("inconsistent inspection regime: {0}")]
    Regime(String),

    #[error("fixed-point iteration did not converge within {iterations} iterations")]
    Convergence { iterations: usize },

    #[error("singular linear system ({context})")]
    SingularSystem { context: &'static str },

    #[error("singular matrix ({context})")]
    SingularMatrix { context: &'static str },

    #[error("spectral radius condition violated: sp(Z) = {z}, sp(B) = {b}, product must be < 1")]
    SpectralRadius { z: f64, b: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
