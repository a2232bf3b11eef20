use crate::conic::SolveStatus;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("AP placement failed: {placed} of {requested} APs placed after {attempts} attempts")]
    PlacementFailure {
        placed: usize,
        requested: usize,
        attempts: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("active set is empty but some users have non-zero SE targets")]
    EmptyActiveSet,

    #[error("SE targets are unreachable even with every AP switched on")]
    GlobalInfeasible,

    #[error("exhaustive search over {m} APs exceeds the cap of {cap}")]
    CapExceeded { m: usize, cap: usize },

    #[error("conic solver stopped with status {0:?}")]
    Solver(SolveStatus),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
