use thiserror::Error;

/// Error type shared by every module. Variants distinguish contract
/// violations (bad input) from numerical conditions (under-resolution,
/// non-convergence, hypothesis failure) so callers can map them to
/// different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),

    #[error("unsupported dimension {dim}: {context}")]
    UnsupportedDimension { dim: usize, context: String },

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("ambiguous fit: {0}")]
    AmbiguousFit(String),

    #[error("not flat: {0}")]
    NotFlat(String),

    #[error("hodograph fold: {0}")]
    HodographFold(String),

    #[error("internal consistency: {0}")]
    Internal(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for conditions that an experiment pipeline records as a flag row
    /// rather than a hard failure.
    pub fn is_numerical_flag(&self) -> bool {
        matches!(
            self,
            Error::UnderResolved(_)
                | Error::HypothesisViolated(_)
                | Error::AmbiguousFit(_)
                | Error::NotFlat(_)
        )
    }
}
