use thiserror::Error;

pub type Result<T> = std::result::Result<T, QemError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QemError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} outside the supported range 1..={max}", max = crate::tensor::MAX_DIM)]
    UnsupportedDimension(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Evaluation point outside the model's domain (boundary, or a vanishing profile).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("structure constants fail the Jacobi identity (residual {residual:.3e} > {tolerance:.1e})")]
    JacobiViolation { residual: f64, tolerance: f64 },

    /// The data does not define an admissible quasi-Einstein structure.
    #[error("structure rejected: {0}")]
    Rejected(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An internal self-check between two derivations of the same quantity failed.
    #[error("self-check failed: {0}")]
    SelfCheck(String),
}

impl QemError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        QemError::InvalidInput(msg.into())
    }
}
