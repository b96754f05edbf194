use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("under-resolved quadrature: {0}")]
    UnderResolved(String),

    #[error("numerical non-convergence: {0}")]
    NotConverged(String),

    #[error("truncation tail {tail:.3e} exceeds tolerance {tolerance:.3e}")]
    TailTooLarge { tail: f64, tolerance: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::UnderResolved(_) | Error::NotConverged(_) | Error::TailTooLarge { .. }
        )
    }
}
