use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("second derivative of g does not exist at 0")]
    SecondDerivativeUndefined,

    #[error("gdnew selection requires a smoothness model for each block")]
    MissingSmoothnessModel,

    #[error("point is not critical: gradient norm {grad_norm} >= tolerance {tol}")]
    NotCritical { grad_norm: f64, tol: f64 },

    #[error("point has no block split but a separable objective was given")]
    MissingBlockSplit,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
