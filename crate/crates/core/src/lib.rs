//! Core of the robot brain: the wire protocol, the certainty-factor user
//! model, perception adapters, the slot-filling dialogue engine and the
//! adaptation rules. Everything here is synchronous and free of I/O apart
//! from configuration and store files; the HTTP service lives in
//! `brain-server`.

pub mod adaptation;
pub mod dialogue;
pub mod perception;
pub mod protocol;
pub mod user_model;

use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("rule `{rule_id}`: {reason}")]
    Rule { rule_id: String, reason: String },
}

pub(crate) fn read_config(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

/// Current UTC time in milliseconds.
pub fn now_millis() -> i64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as i64).unwrap_or(0)
}
