use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum McranError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A channel vector has zero norm, so MRC beamformers are undefined.
    #[error("degenerate channel for cloud {cloud}, user {user}")]
    DegenerateChannel { cloud: usize, user: usize },

    /// An iterative procedure hit its round/iteration guard.
    #[error("{what} did not terminate within {limit} iterations")]
    IterationLimit { what: &'static str, limit: usize },

    /// Exhaustive enumeration would exceed the instance-size guard.
    #[error("instance too large for exhaustive search: {0} assignments")]
    InstanceTooLarge(f64),

    #[error("solver: {0}")]
    Solver(#[from] crate::solver::SolverError),
}
