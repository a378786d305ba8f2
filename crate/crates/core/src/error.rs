use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("curve needs at least {min} edges, got {got}")]
    TooFewNodes { min: usize, got: usize },

    #[error("immersedness violated: edge {edge} has length {length:e}")]
    ImmersionViolation { edge: usize, length: f64 },

    #[error("endpoint {index} is off the axis line (y = {y:e})")]
    EndpointOffAxis { index: usize, y: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integration diverged at s = {at:.6}")]
    Divergence { at: f64 },

    #[error("shooting did not converge after {iterations} iterations (residual {residual:e})")]
    ShootingFailure { iterations: usize, residual: f64 },

    #[error("enumeration incomplete at ell = {ell}: missing {missing}")]
    EnumerationIncomplete { ell: f64, missing: String },

    #[error("constrained minimization failed for (ell, r) = ({ell}, {r}): {reason}")]
    OptimizationFailure { ell: f64, r: f64, reason: String },

    #[error("length collapsed to {length:e} for (ell, r) = ({ell}, {r})")]
    LengthDegeneracy { ell: f64, r: f64, length: f64 },

    #[error("flow step failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("edge collapse at t = {t}: min edge {min_edge:e}")]
    Degeneracy { t: f64, min_edge: f64 },

    #[error("initial datum preparation failed: {0}")]
    PreparationFailure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
