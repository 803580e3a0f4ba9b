use thiserror::Error;

/// Errors produced by the model, solver and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector lengths disagree with the grouping plan.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A node's gain does not fall inside the threshold ladder.
    #[error("gain {gain:e} outside threshold range ({lower:e}, {upper:e}]")]
    GainOutOfRange { gain: f64, lower: f64, upper: f64 },

    /// The utility floor exceeds the best achievable utility.
    #[error("infeasible, U'_c = {u_prime_c:.6} exceeds U'_max = {u_prime_max:.6}")]
    Infeasible { u_prime_c: f64, u_prime_max: f64 },

    /// The utility floor exceeds the best utility any common probability reaches.
    #[error("infeasible under uniform policy, U'_c = {u_prime_c:.6} exceeds uniform U'_max = {u_prime_max:.6}")]
    UniformInfeasible { u_prime_c: f64, u_prime_max: f64 },

    /// Iterative search stopped without meeting its tolerance.
    #[error("no convergence after {iterations} iterations (lambda = {lambda:e}, residual = {residual:e})")]
    NonConvergence {
        iterations: usize,
        lambda: f64,
        residual: f64,
    },

    /// The brute-force oracle was asked for more nodes than it enumerates.
    #[error("grid oracle supports at most {max} nodes, got {got}")]
    TooManyNodes { max: usize, got: usize },

    /// No grid point satisfies the utility floor.
    #[error("no feasible grid point")]
    NoFeasiblePoint,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
