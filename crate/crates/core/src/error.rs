use thiserror::Error;

/// Errors raised by the numerical and modelling layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("gamma function pole at z = {0}")]
    GammaPole(f64),

    #[error("series did not converge within {terms} terms ({what})")]
    NonConvergence { what: &'static str, terms: usize },

    #[error("contour separation failed: {0}")]
    ContourSeparation(String),

    #[error("integral needs {folds} folds, limit is {limit}")]
    FoldLimitExceeded { folds: usize, limit: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    Domain { field: String, reason: String },

    #[error("moment of order {order} does not exist (m_s = {m_s})")]
    MomentDoesNotExist { order: u32, m_s: f64 },

    #[error("moment matching infeasible: {0}")]
    MomentMatchInfeasible(String),

    #[error("method `{method}` unavailable: {reason}")]
    MethodUnavailable { method: String, reason: String },

    #[error("need at least {needed} trials, got {got}")]
    InsufficientTrials { needed: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(field: &str, reason: impl Into<String>) -> Error {
    Error::Domain {
        field: field.to_string(),
        reason: reason.into(),
    }
}
