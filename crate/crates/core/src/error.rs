use thiserror::Error;

/// Errors raised by the recovery, certification and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration that is well-formed but cannot be run (too few
    /// measurements for the requested grouping, an empty parameter window, ...).
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    EigenNotConverged { sweeps: usize, residual: f64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("degenerate solution: {0}")]
    Degenerate(String),

    #[error("enumeration budget exceeded: {required} > {budget}")]
    BudgetExceeded { required: f64, budget: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch { .. } | Error::InvalidInput(_) | Error::Json(_) => 2,
            Error::Infeasible(_) | Error::BudgetExceeded { .. } => 3,
            Error::EigenNotConverged { .. } | Error::Factorization(_) | Error::Degenerate(_) => 4,
            Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
