//! Feature-value user model with certainty factors.
//!
//! A [`UserRecord`] holds explicitly asked attributes (certainty 1.0),
//! attributes inferred from perception (certainty taken from the detector),
//! an interaction counter and the per-interaction dominant-emotion history.

mod certainty;
mod emotion;
mod schema;
mod store;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::FaceTemplate;

pub use certainty::combine_certainty;
pub use emotion::{predominant_emotion, Emotion, EmotionScores};
pub use schema::{AttributeSchema, SchemaEntry};
pub use store::{StoreError, UserStore};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("certainty {0} is outside [0, 1]")]
    CertaintyOutOfRange(f64),
    #[error("attribute key `{0}` is not in the attribute schema")]
    UnknownAttribute(String),
    #[error("unknown emotion `{0}`")]
    UnknownEmotion(String),
    #[error("no emotion frames to aggregate")]
    NoData,
    #[error("face template can only be stored for a user who gave consent")]
    ConsentRequired,
    #[error("invalid user record `{user_id}`: {reason}")]
    InvalidRecord { user_id: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Asked of the user directly.
    Explicit,
    /// Inferred from perception.
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeValue {
    pub key: String,
    pub value: String,
    pub source: Source,
    pub certainty: f64,
    /// UTC milliseconds.
    pub updated_at: i64,
}

/// One entry of a user's emotion history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmotionRecord {
    /// 1-based index of the interaction this emotion belongs to.
    pub interaction: u64,
    pub emotion: Emotion,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserRecord {
    user_id: String,
    consent: bool,
    face_template: Option<FaceTemplate>,
    attributes: BTreeMap<String, AttributeValue>,
    interaction_count: u64,
    emotion_history: Vec<EmotionRecord>,
}

impl UserRecord {
    pub fn new(user_id: impl Into<String>) -> Self {
        Self {
            user_id: user_id.into(),
            consent: false,
            face_template: None,
            attributes: BTreeMap::new(),
            interaction_count: 0,
            emotion_history: Vec::new(),
        }
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn consent(&self) -> bool {
        self.consent
    }

    /// Withdrawing consent drops any stored face template.
    pub fn set_consent(&mut self, consent: bool) {
        self.consent = consent;
        if !consent {
            self.face_template = None;
        }
    }

    pub fn face_template(&self) -> Option<&FaceTemplate> {
        self.face_template.as_ref()
    }

    pub fn attach_face_template(&mut self, template: FaceTemplate) -> Result<(), ModelError> {
        if !self.consent {
            return Err(ModelError::ConsentRequired);
        }
        self.face_template = Some(template);
        Ok(())
    }

    pub fn attributes(&self) -> &BTreeMap<String, AttributeValue> {
        &self.attributes
    }

    pub fn attribute(&self, key: &str) -> Option<&AttributeValue> {
        self.attributes.get(key)
    }

    pub fn has_attribute(&self, key: &str) -> bool {
        self.attributes.contains_key(key)
    }

    pub fn interaction_count(&self) -> u64 {
        self.interaction_count
    }

    pub fn emotion_history(&self) -> &[EmotionRecord] {
        &self.emotion_history
    }

    pub fn last_emotion(&self) -> Option<Emotion> {
        self.emotion_history.last().map(|r| r.emotion)
    }

    /// Stores one observation of an attribute.
    ///
    /// Equal values (case-insensitive) reinforce each other through
    /// [`combine_certainty`]. Differing values compete: the observation with
    /// the higher certainty is kept, the newer one on ties. Explicit
    /// observations always carry certainty 1.0.
    pub fn upsert_attribute(
        &mut self,
        schema: &AttributeSchema,
        key: &str,
        value: &str,
        certainty: f64,
        source: Source,
        now_ms: i64,
    ) -> Result<(), ModelError> {
        let certainty = certainty::check_certainty(certainty)?;
        if !schema.contains(key) {
            return Err(ModelError::UnknownAttribute(key.to_string()));
        }
        let certainty = match source {
            Source::Explicit => 1.0,
            Source::Implicit => certainty,
        };
        let incoming = AttributeValue {
            key: key.to_string(),
            value: value.to_string(),
            source,
            certainty,
            updated_at: now_ms,
        };

        match self.attributes.get_mut(key) {
            None => {
                self.attributes.insert(key.to_string(), incoming);
            }
            Some(prior) if prior.value.to_lowercase() == value.to_lowercase() => {
                prior.certainty = combine_certainty(prior.certainty, certainty)?;
                prior.value = incoming.value;
                prior.updated_at = now_ms;
                if source == Source::Explicit {
                    prior.source = Source::Explicit;
                }
            }
            Some(prior) => {
                if certainty >= prior.certainty {
                    *prior = incoming;
                }
            }
        }
        Ok(())
    }

    /// Closes one interaction: bumps the counter and, when the interaction
    /// produced a dominant emotion, appends it to the history.
    pub fn record_interaction(&mut self, predominant: Option<(Emotion, f64)>) {
        self.interaction_count += 1;
        if let Some((emotion, score)) = predominant {
            self.emotion_history.push(EmotionRecord { interaction: self.interaction_count, emotion, score });
        }
    }

    /// Checks the invariants that deserialization alone cannot enforce.
    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |reason: String| ModelError::InvalidRecord { user_id: self.user_id.clone(), reason };
        if self.user_id.is_empty() {
            return Err(invalid("empty user_id".into()));
        }
        if !self.consent && self.face_template.is_some() {
            return Err(invalid("face_template present without consent".into()));
        }
        if let Some(t) = &self.face_template {
            t.validate().map_err(|e| invalid(e.to_string()))?;
        }
        for (key, attr) in &self.attributes {
            if &attr.key != key {
                return Err(invalid(format!("attribute stored under `{key}` names `{}`", attr.key)));
            }
            if !(0.0..=1.0).contains(&attr.certainty) {
                return Err(invalid(format!("attribute `{key}` certainty {}", attr.certainty)));
            }
            if attr.source == Source::Explicit && attr.certainty != 1.0 {
                return Err(invalid(format!("explicit attribute `{key}` below certainty 1.0")));
            }
        }
        if (self.emotion_history.len() as u64) > self.interaction_count {
            return Err(invalid("emotion history longer than interaction count".into()));
        }
        let mut last = 0;
        for entry in &self.emotion_history {
            if entry.interaction <= last || entry.interaction > self.interaction_count {
                return Err(invalid(format!("bad interaction index {}", entry.interaction)));
            }
            if !(0.0..=1.0).contains(&entry.score) {
                return Err(invalid(format!("emotion score {}", entry.score)));
            }
            last = entry.interaction;
        }
        Ok(())
    }
}
