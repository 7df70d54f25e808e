//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("solver did not converge ({context}): kkt violation {kkt_violation:.3e}")]
    NonConvergence { context: String, kkt_violation: f64 },

    #[error("separation detected ({context}): a coefficient exceeded the saturation cap")]
    Separation { context: String },

    #[error("singular system ({context})")]
    Singular { context: String },

    #[error("near-singular nodewise residual variance for column {k}: tau_sq = {tau_sq:.3e}")]
    NearSingular { k: usize, tau_sq: f64 },

    #[error("degenerate variance for target {k}: sigma is zero, cannot studentize")]
    DegenerateVariance { k: usize },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Tag an error with the sub-problem it came from.
    pub fn in_context(self, what: &str) -> Error {
        match self {
            Error::NonConvergence { context, kkt_violation } => Error::NonConvergence {
                context: format!("{what}: {context}"),
                kkt_violation,
            },
            Error::Separation { context } => Error::Separation {
                context: format!("{what}: {context}"),
            },
            Error::Singular { context } => Error::Singular {
                context: format!("{what}: {context}"),
            },
            other => other,
        }
    }
}
