use std::path::PathBuf;

use evofam_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Hypothesis(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::Io { .. } | CliError::Output(_) => 1,
        }
    }

    pub fn invalid(key: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("{key}: {msg}"))
    }

    /// Attaches the config key a core validation error came from.
    pub fn at(key: &str) -> impl Fn(CoreError) -> CliError + '_ {
        move |e| match CliError::from(e) {
            CliError::Validation(msg) => CliError::Validation(format!("{key}: {msg}")),
            other => other,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidParameter(_) | CoreError::DimensionMismatch { .. } => CliError::Validation(msg),
            CoreError::HypothesisViolation { .. }
            | CoreError::NonHyperbolic { .. }
            | CoreError::ContractionViolation(_)
            | CoreError::DegenerateMeasure { .. }
            | CoreError::DegenerateProbe { .. } => CliError::Hypothesis(msg),
            CoreError::TruncationFailure { .. }
            | CoreError::Divergence { .. }
            | CoreError::OracleInstability { .. }
            | CoreError::NonFinite { .. } => CliError::NonConvergence(msg),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
