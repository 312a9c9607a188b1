use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("Riccati iteration did not converge after {iterations} iterations ({reason})")]
    NoConvergence { iterations: usize, reason: &'static str },

    #[error("BᵀKB + R is singular")]
    SingularInnerMatrix,

    #[error("trajectory has no transitions")]
    EmptyTrajectory,

    #[error("gain basis has row rank {rank} < {required}")]
    RankDeficientBasis { rank: usize, required: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("episode {episode} exhausted {attempts} Riccati redraws")]
    RedrawBudgetExhausted { episode: usize, attempts: usize },

    #[error("no records to summarize")]
    EmptyInput,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that originate in reading or writing files.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Json(e) => e.is_io(),
            Error::Csv(e) => e.is_io_error(),
            _ => false,
        }
    }
}
