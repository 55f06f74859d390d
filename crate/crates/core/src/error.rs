use thiserror::Error;

/// Errors raised by every layer of the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("mode index {mode} out of range for {n_modes} modes")]
    ModeIndex { mode: usize, n_modes: usize },

    #[error("duplicate mode index {0} in selection")]
    DuplicateMode(usize),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(
        "infeasible split: remaining mass {remaining:e} at port {port} with P = {probability:e}"
    )]
    InfeasibleSplit {
        port: usize,
        remaining: f64,
        probability: f64,
    },

    #[error("dark response on channel(s) {channels:?}")]
    DarkResponse { channels: Vec<usize> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("allocation error: squeezed photons {n_s} must be below total {n_total}")]
    Allocation { n_s: f64, n_total: f64 },

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("truncation error: norm deficit {deficit:e} exceeds budget {budget:e}")]
    Truncation { deficit: f64, budget: f64 },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("noise matrix could not be regularized: {0}")]
    Regularization(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Whether the error stems from user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidDimension(_)
                | Error::ModeIndex { .. }
                | Error::DuplicateMode(_)
                | Error::InvalidParameter { .. }
                | Error::Config { .. }
                | Error::Parse { .. }
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// Reads and parses a JSON file; syntax and schema errors carry their position.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub type Result<T> = std::result::Result<T, Error>;
