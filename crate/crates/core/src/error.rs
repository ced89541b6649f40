use thiserror::Error;

/// Errors raised by the model layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("characteristics are rank deficient: numerical rank {rank} < {columns}")]
    RankDeficient { rank: usize, columns: usize },

    #[error("non-positive mean utility at good(s) {goods:?}")]
    NonPositiveUtility { goods: Vec<usize> },

    #[error("inner product {inner} exceeds the Cauchy-Schwarz bound {bound}")]
    CauchySchwarz { inner: f64, bound: f64 },

    #[error("loadings are not orthonormal (Gram deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("degenerate rotation pair: {0}")]
    DegeneratePair(&'static str),

    #[error("rotation index ({i}, {j}) invalid for dimension {dim}")]
    RotationIndex { i: usize, j: usize, dim: usize },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },
}

impl ModelError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        ModelError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of an iterative numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, ModelError::NoConvergence { .. })
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
