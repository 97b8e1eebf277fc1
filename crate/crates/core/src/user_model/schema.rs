use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Source;
use crate::ConfigError;

const DEFAULT_SCHEMA: &str = include_str!("../../config/schema.json");

/// One feature the user model may hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaEntry {
    pub key: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
}

/// The set of attribute keys a [`super::UserRecord`] accepts.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSchema {
    entries: Vec<SchemaEntry>,
}

impl AttributeSchema {
    pub fn new(entries: Vec<SchemaEntry>) -> Result<Self, ConfigError> {
        for (i, e) in entries.iter().enumerate() {
            if e.key.trim().is_empty() {
                return Err(ConfigError::Invalid(format!("schema entry {i} has an empty key")));
            }
            if entries[..i].iter().any(|p| p.key == e.key) {
                return Err(ConfigError::Invalid(format!("duplicate schema key `{}`", e.key)));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_json(json: &str) -> Result<Self, ConfigError> {
        let entries: Vec<SchemaEntry> = serde_json::from_str(json)?;
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&crate::read_config(path)?)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.iter().any(|e| e.key == key)
    }

    pub fn get(&self, key: &str) -> Option<&SchemaEntry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn entries(&self) -> &[SchemaEntry] {
        &self.entries
    }
}

impl Default for AttributeSchema {
    /// name, consent, profession, favorite color and sport (explicit);
    /// gender and age range (implicit).
    fn default() -> Self {
        Self::from_json(DEFAULT_SCHEMA).expect("bundled schema is valid")
    }
}
