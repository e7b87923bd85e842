use thiserror::Error;

use crate::picard::ContractionReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite signal value at t = {t}")]
    NonFinite { t: f64 },

    #[error("degenerate measure: mu([{a}, {b}]) = {mass:e} is below tolerance")]
    DegenerateMeasure { a: f64, b: f64, mass: f64 },

    #[error("degenerate probe interval [{a}, {b}]: mu(A) = {mass:e}")]
    DegenerateProbe { a: f64, b: f64, mass: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("family is not hyperbolic: rate #{index} is zero")]
    NonHyperbolic { index: usize },

    #[error("hypothesis violated at t = {t}: {what}")]
    HypothesisViolation { t: f64, what: String },

    #[error("truncation tolerance {tolerance:e} unreachable within {cap} windows (bound at cap: {achieved:e})")]
    TruncationFailure {
        tolerance: f64,
        achieved: f64,
        cap: usize,
    },

    #[error("contraction condition fails: kappa = {:.6} (lip_norm {:.6} >= threshold {:.6})", .0.kappa, .0.lip_norm, .0.threshold)]
    ContractionViolation(ContractionReport),

    #[error("Picard iteration diverging after sweep {sweep}: sup deltas {deltas:?}")]
    Divergence { sweep: usize, deltas: Vec<f64> },

    #[error("finite-difference oracle unstable at t = {t}: growth factor {growth:.6}")]
    OracleInstability { t: f64, growth: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
