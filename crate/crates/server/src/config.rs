use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use brain_core::perception::{DEFAULT_FACE_THRESHOLD, DEFAULT_TEMPLATE_DIM};
use serde::Deserialize;

use crate::error::StartupError;

/// Server settings. Read from an optional TOML file, then overridden by
/// command-line flags or `BRAIN_*` environment variables.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    /// Newline-delimited JSON user store; created on first write.
    pub store_path: PathBuf,
    /// Question script; the bundled five-question script when unset.
    pub script_path: Option<PathBuf>,
    /// Adaptation rules; the bundled rules when unset.
    pub rules_path: Option<PathBuf>,
    /// Attribute schema; the bundled schema when unset.
    pub schema_path: Option<PathBuf>,
    pub face_threshold: f64,
    pub template_dim: usize,
    pub session_timeout_secs: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            store_path: PathBuf::from("users.jsonl"),
            script_path: None,
            rules_path: None,
            schema_path: None,
            face_threshold: DEFAULT_FACE_THRESHOLD,
            template_dim: DEFAULT_TEMPLATE_DIM,
            session_timeout_secs: 300,
        }
    }
}

/// Values that take precedence over the configuration file.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub listen: Option<SocketAddr>,
    pub store_path: Option<PathBuf>,
    pub script_path: Option<PathBuf>,
    pub rules_path: Option<PathBuf>,
    pub schema_path: Option<PathBuf>,
    pub face_threshold: Option<f64>,
    pub template_dim: Option<usize>,
    pub session_timeout_secs: Option<u64>,
}

impl ServerConfig {
    pub fn from_file(path: &Path) -> Result<Self, StartupError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| StartupError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| StartupError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(mut self, o: ConfigOverrides) -> Self {
        if let Some(v) = o.listen {
            self.listen = v;
        }
        if let Some(v) = o.store_path {
            self.store_path = v;
        }
        if o.script_path.is_some() {
            self.script_path = o.script_path;
        }
        if o.rules_path.is_some() {
            self.rules_path = o.rules_path;
        }
        if o.schema_path.is_some() {
            self.schema_path = o.schema_path;
        }
        if let Some(v) = o.face_threshold {
            self.face_threshold = v;
        }
        if let Some(v) = o.template_dim {
            self.template_dim = v;
        }
        if let Some(v) = o.session_timeout_secs {
            self.session_timeout_secs = v;
        }
        self
    }

    pub fn validate(&self) -> Result<(), StartupError> {
        if !self.face_threshold.is_finite() || self.face_threshold < 0.0 {
            return Err(StartupError::Config(format!(
                "face_threshold must be >= 0, got {}",
                self.face_threshold
            )));
        }
        if self.template_dim == 0 {
            return Err(StartupError::Config("template_dim must be positive".into()));
        }
        if self.session_timeout_secs == 0 {
            return Err(StartupError::Config("session_timeout_secs must be positive".into()));
        }
        Ok(())
    }

    pub fn session_timeout(&self) -> Duration {
        Duration::from_secs(self.session_timeout_secs)
    }
}
