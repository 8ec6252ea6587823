use thiserror::Error;

/// Errors produced by model construction, solving and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("state space has {states} states, exceeding the limit of {limit}; reduce K or L")]
    Capacity { states: u128, limit: u64 },

    #[error("numerical consistency error: {0}")]
    Numerical(String),

    #[error("stationary solver failed: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
