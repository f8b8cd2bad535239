use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not a cover: {0}")]
    NotACover(String),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("map is not perfect: {0}")]
    NotPerfect(String),

    #[error("set is not invariant: {0}")]
    NotInvariant(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("grid too coarse: step {step} exceeds eps/4 = {limit}")]
    Resolution { step: String, limit: String },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("conjugacy check failed: {0}")]
    Conjugacy(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
