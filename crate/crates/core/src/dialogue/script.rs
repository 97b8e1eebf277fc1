use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::protocol::QuestionKind;
use crate::user_model::AttributeSchema;
use crate::ConfigError;

const DEFAULT_SCRIPT: &str = include_str!("../../config/script.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    pub question_id: String,
    pub attribute_key: String,
    pub prompt_text: String,
    pub kind: QuestionKind,
}

/// Ordered slot-filling questionnaire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionScript {
    entries: Vec<ScriptEntry>,
}

impl QuestionScript {
    /// Question ids and attribute keys must be unique, every key must be in
    /// the schema, and exactly one entry asks for consent.
    pub fn new(entries: Vec<ScriptEntry>, schema: &AttributeSchema) -> Result<Self, ConfigError> {
        let mut ids = HashSet::new();
        let mut keys = HashSet::new();
        for e in &entries {
            if e.question_id.is_empty() || e.prompt_text.trim().is_empty() {
                return Err(ConfigError::Invalid(format!(
                    "script entry `{}` needs a question id and a prompt",
                    e.question_id
                )));
            }
            if !ids.insert(e.question_id.as_str()) {
                return Err(ConfigError::Invalid(format!("duplicate question id `{}`", e.question_id)));
            }
            if !keys.insert(e.attribute_key.as_str()) {
                return Err(ConfigError::Invalid(format!("attribute `{}` is asked twice", e.attribute_key)));
            }
            if !schema.contains(&e.attribute_key) {
                return Err(ConfigError::Invalid(format!(
                    "question `{}` targets unknown attribute `{}`",
                    e.question_id, e.attribute_key
                )));
            }
        }
        let consent = entries.iter().filter(|e| e.kind == QuestionKind::Consent).count();
        if consent != 1 {
            return Err(ConfigError::Invalid(format!(
                "script must contain exactly one consent question, found {consent}"
            )));
        }
        Ok(Self { entries })
    }

    pub fn from_json(json: &str, schema: &AttributeSchema) -> Result<Self, ConfigError> {
        Self::new(serde_json::from_str(json)?, schema)
    }

    pub fn load(path: &Path, schema: &AttributeSchema) -> Result<Self, ConfigError> {
        Self::from_json(&crate::read_config(path)?, schema)
    }

    /// Name, consent, profession, favorite color, favorite sport.
    pub fn default_for(schema: &AttributeSchema) -> Result<Self, ConfigError> {
        Self::from_json(DEFAULT_SCRIPT, schema)
    }

    pub fn entries(&self) -> &[ScriptEntry] {
        &self.entries
    }

    pub fn get(&self, question_id: &str) -> Option<&ScriptEntry> {
        self.entries.iter().find(|e| e.question_id == question_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
