use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller broke an API contract (mismatched grids, zero local oscillator, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// Parameters outside the domain where the requested quantity exists.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration diverged at z = {z}: {reason}")]
    Diverged { z: f64, reason: String },

    /// Background reconstruction drifted away from the stored checkpoints.
    #[error("background mismatch at z = {z}: deviation {deviation:e} exceeds {limit:e}")]
    Background { z: f64, deviation: f64, limit: f64 },

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
