use thiserror::Error;

/// Errors raised by the divergence, sampling, tail and efficiency routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {left} vs {right} cells")]
    DimensionMismatch { left: usize, right: usize },

    #[error("hypothetical probability is zero at cell {cell}")]
    ZeroHypothesisCell { cell: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbVec(String),

    #[error("empty counts (n = 0)")]
    EmptyCounts,

    #[error("capacity exceeded: {what} requires {required}, budget is {budget}")]
    Capacity {
        what: &'static str,
        required: f64,
        budget: f64,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("tail underflow: increase n budget or use exact method")]
    TailUnderflow,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for budget/capacity failures (enumeration size, search caps).
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity { .. })
    }
}
