use thiserror::Error;

/// Errors produced anywhere in the lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape mismatch: expected {expected}, got {got}")]
    InputShape { expected: usize, got: usize },

    #[error("cannot compose: inner output dim {inner} != outer input dim {outer}")]
    Composition { inner: usize, outer: usize },

    #[error("cannot stack networks: {0}")]
    Stacking(String),

    #[error("cannot combine networks: {0}")]
    Combination(String),

    #[error("malformed network: {0}")]
    Malformed(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("point outside the domain: {0}")]
    Domain(String),

    #[error("target function failed: {0}")]
    Oracle(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric failure in layer {layer}: {detail}")]
    Numeric { layer: usize, detail: String },

    #[error("training aborted at step {step}: {detail}")]
    TrainingAborted { step: usize, detail: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
