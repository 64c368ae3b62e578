use thiserror::Error;

use crate::optim::maxent::MaxEntSolution;

/// Errors raised by the numerical kernels and the channel models.
#[derive(Debug, Error)]
pub enum Error {
    #[error("operator is not Hermitian: asymmetry {deviation:e} exceeds tolerance {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigenvalue {eigenvalue:e} is below the floor {floor:e}")]
    EigenvalueBelowFloor { eigenvalue: f64, floor: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("constraint set is infeasible: {message}")]
    Infeasible {
        message: String,
        /// Combination of constraint labels whose values are inconsistent.
        direction: Vec<f64>,
    },

    /// Dual iterates of the maxent solve ran away; the optimum sits on the
    /// boundary of the positive cone (or the data are infeasible).
    #[error("dual variables diverged (|lambda| = {norm:e}); best iterate attached")]
    DualDivergence { norm: f64, best: Box<MaxEntSolution> },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("solver did not converge after {iterations} iterations (gap {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },

    #[error("dimension {dim} exceeds the dense cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("spanning set has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
