use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("quadrature budget exceeded: {needed} nodes requested, budget {budget}")]
    Budget { needed: usize, budget: usize },
    #[error("collision acceptance probability {probability} exceeds 1 (reduce dt)")]
    MajorantOverflow { probability: f64 },
    #[error("fit error: {0}")]
    Fit(String),
    #[error("sampler failure: {0}")]
    Sampler(String),
    #[error("jet lacks the derivatives required by {0}")]
    MissingDerivative(String),
}

pub type Result<T> = std::result::Result<T, Error>;
