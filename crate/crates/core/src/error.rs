use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scenario or numerology failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A parameter passed to a signal-processing routine is out of range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Receiver timing or calibration does not match the signal it is given.
    #[error("receiver error: {0}")]
    Receiver(String),

    #[error("calibration failed: zero response on subcarrier {subcarrier}")]
    DegenerateSubcarrier { subcarrier: i64 },

    #[error("target BER {target} not bracketed within [{lo_db}, {hi_db}] dB")]
    NotBracketed { target: f64, lo_db: f64, hi_db: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for configuration, I/O and parse failures (CLI exit code 2);
    /// false for failures during computation (exit code 1).
    pub fn is_config_or_io(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Io { .. } | Error::Json { .. }
        )
    }
}
