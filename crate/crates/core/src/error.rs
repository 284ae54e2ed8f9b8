use thiserror::Error;

/// Errors raised by mechanisms, estimators, environments and algorithm drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Gaussian mechanism requires δ>0; use the ℓ2-ball mechanism for pure ε-LDP")]
    GaussianRequiresDelta,

    #[error("input norm {norm} exceeds bound {bound}; clip or rescale before privatizing")]
    NormExceedsBound { norm: f64, bound: f64 },

    #[error("reward {reward} outside [-{bound}, {bound}]; the environment must clip rewards")]
    RewardOutOfRange { reward: f64, bound: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (entry ({row},{col}))")]
    NotSymmetric { row: usize, col: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("estimator has no observations")]
    NoData,

    #[error("shifted Gram matrix is not positive definite even after the fallback ridge")]
    SolveFailed,

    #[error("arm index {arm} out of range for {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
