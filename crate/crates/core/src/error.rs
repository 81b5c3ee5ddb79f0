use thiserror::Error;

/// Errors produced by model construction, solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum SpiError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = SpiError> = std::result::Result<T, E>;
