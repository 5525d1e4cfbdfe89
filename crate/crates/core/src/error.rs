use thiserror::Error;

use crate::rotor_cavity::Configuration;

pub type Result<T, E = PolaritonError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PolaritonError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("configuration mismatch: model is {model:?}, pulse train is {train:?}")]
    ConfigMismatch { model: Configuration, train: Configuration },

    #[error("time step {dt} exceeds the stability bound {bound} for this model")]
    StepTooCoarse { dt: f64, bound: f64 },

    #[error("norm drift {drift:e} at t = {time} exceeds the abort threshold")]
    NormDrift { drift: f64, time: f64 },

    #[error("convergence probe gave up: dt fell below {floor} without meeting tolerance")]
    ProbeGaveUp { floor: f64 },

    #[error("brute-force maximizer did not converge: best restarts differ by {spread:e}")]
    NonConvergence { spread: f64 },

    #[error("not enough orientation peaks to measure a revival period (found {found})")]
    InsufficientPeaks { found: usize },

    #[error("post-pulse window is empty")]
    EmptyWindow,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PolaritonError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Self::InvalidParameter { name, reason: reason.into() }
    }
}
