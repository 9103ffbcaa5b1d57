use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot retract: X + t·p vanishes")]
    DegenerateRetraction,

    #[error("singular Fisher information matrix (smallest eigenvalue {min_eigenvalue:e})")]
    SingularFim { min_eigenvalue: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure in scenario {scenario} at iteration {iteration}: {reason}")]
    Numerical {
        scenario: usize,
        iteration: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
