//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by label-space construction, loss evaluation, analysis and training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid label space: {0}")]
    InvalidLabelSpace(String),

    #[error("score vector has {found} entries, expected {expected}")]
    ScoreLength { expected: usize, found: usize },

    #[error("non-finite score {value} at index {index}")]
    InvalidScore { index: usize, value: f64 },

    #[error("label {label} out of range (expected < {bound})")]
    InvalidLabel { label: usize, bound: usize },

    #[error("unknown point {0}")]
    UnknownPoint(String),

    #[error(
        "cost {cost} of expert {expert} at point {point}, label {label} lies outside [{lower}, {upper}]"
    )]
    CostBound {
        expert: usize,
        point: usize,
        label: usize,
        cost: f64,
        lower: f64,
        upper: f64,
    },

    #[error("zero-sum constraint violated: scores sum to {sum:e} (tolerance 1e-6)")]
    Constraint { sum: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid expert panel: {0}")]
    InvalidPanel(String),

    #[error("cannot parse surrogate spec `{token}`: {reason}; valid tokens: {valid}")]
    SpecParse {
        token: String,
        reason: String,
        valid: String,
    },

    #[error("inner minimization did not converge (best value {best})")]
    OptimizationFailure { best: f64 },

    #[error("argument outside its domain: {0}")]
    Domain(String),

    #[error("cost mode: {0}")]
    CostMode(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite training loss at epoch {epoch}, batch {batch} (parameter norm {param_norm})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        param_norm: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
