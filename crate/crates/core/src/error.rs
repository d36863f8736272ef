use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A non-finite or otherwise out-of-domain numeric value.
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// A model, device or scenario field violates its invariant.
    #[error("invalid value for `{field}`: {reason}")]
    InvalidField { field: String, reason: String },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("simulation aborted at t = {t:.4} s: {reason}")]
    SimulationAborted { t: f64, reason: String },

    #[error("config file not found: {}", .0.display())]
    ConfigNotFound(PathBuf),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("sweep failed at parameter value {value}: {source}")]
    Sweep {
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("empty series")]
    EmptySeries,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidField {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericDomain(format!("{name} is not finite ({value})")))
    }
}
