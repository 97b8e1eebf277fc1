//! Wire messages between a robot client and the brain server.
//!
//! Every top-level message is a JSON object carrying `"version": "v1"` as
//! its first field, followed by the message fields in declaration order.
//! Byte payloads travel as standard base64 strings. Encoding is
//! deterministic: equal values always produce identical bytes.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, DeserializeOwned};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::perception::{EmotionFrame, FaceTemplate};
use crate::user_model::{Emotion, UserRecord};

pub const PROTOCOL_VERSION: &str = "v1";

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Parse(String),
    #[error("invalid field `{field}`: {reason}")]
    Validation { field: String, reason: String },
    #[error("unsupported protocol version `{0}`")]
    Version(String),
}

impl ProtocolError {
    fn invalid(field: impl Into<String>, reason: impl fmt::Display) -> Self {
        ProtocolError::Validation { field: field.into(), reason: reason.to_string() }
    }
}

/// A top-level protocol message.
pub trait Message: Serialize + DeserializeOwned {
    /// Checks invariants that the JSON shape alone does not capture.
    fn validate(&self) -> Result<(), ProtocolError> {
        Ok(())
    }
}

#[derive(Serialize)]
struct Envelope<'a, M> {
    version: &'static str,
    #[serde(flatten)]
    body: &'a M,
}

pub fn encode_message<M: Message>(message: &M) -> Vec<u8> {
    serde_json::to_vec(&Envelope { version: PROTOCOL_VERSION, body: message })
        .expect("protocol messages always serialize")
}

pub fn decode_message<M: Message>(bytes: &[u8]) -> Result<M, ProtocolError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| ProtocolError::Parse(e.to_string()))?;
    let Value::Object(mut map) = value else {
        return Err(ProtocolError::invalid("$", "expected a JSON object"));
    };
    let version = map.remove("version");
    if let Some(v) = &version {
        match v.as_str() {
            Some(PROTOCOL_VERSION) => {}
            Some(other) => return Err(ProtocolError::Version(other.to_string())),
            None => return Err(ProtocolError::Version(v.to_string())),
        }
    }
    let message: M = serde_path_to_error::deserialize(Value::Object(map)).map_err(|e| {
        let reason = e.inner().to_string();
        let path = e.path().to_string();
        let field = if path == "." { backticked(&reason).unwrap_or(path) } else { path };
        ProtocolError::Validation { field, reason }
    })?;
    if version.is_none() {
        return Err(ProtocolError::invalid("version", "missing"));
    }
    message.validate()?;
    Ok(message)
}

/// Pulls the field name out of serde's "missing field `x`" style messages.
fn backticked(reason: &str) -> Option<String> {
    let start = reason.find('`')? + 1;
    let len = reason[start..].find('`')?;
    Some(reason[start..start + len].to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Register {
    Formal,
    Informal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tone {
    Playful,
    Serious,
}

/// Facial expression the robot should show: one of the seven emotions or
/// `neutral`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Expression {
    #[default]
    Neutral,
    Emotion(Emotion),
}

impl Expression {
    pub fn as_str(self) -> &'static str {
        match self {
            Expression::Neutral => "neutral",
            Expression::Emotion(e) => e.name(),
        }
    }
}

impl From<Option<Emotion>> for Expression {
    fn from(e: Option<Emotion>) -> Self {
        e.map_or(Expression::Neutral, Expression::Emotion)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Expression {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "neutral" {
            return Ok(Expression::Neutral);
        }
        s.parse::<Emotion>()
            .map(Expression::Emotion)
            .map_err(|_| format!("unknown expression `{s}`, expected `neutral` or one of the seven emotions"))
    }
}

impl Serialize for Expression {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// Behaviour instruction returned to the robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Directive {
    pub register: Register,
    pub tone: Tone,
    pub expression: Expression,
}

impl Default for Directive {
    fn default() -> Self {
        Self { register: Register::Formal, tone: Tone::Serious, expression: Expression::Neutral }
    }
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let register = match self.register {
            Register::Formal => "formal",
            Register::Informal => "informal",
        };
        let tone = match self.tone {
            Tone::Playful => "playful",
            Tone::Serious => "serious",
        };
        write!(f, "register={register} tone={tone} expression={}", self.expression)
    }
}

impl Message for Directive {}

/// Opens a session: the robot saw someone and sends their face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionHello {
    pub client_id: String,
    pub face_probe: FaceTemplate,
    /// UTC milliseconds.
    pub timestamp: i64,
}

impl Message for SessionHello {
    fn validate(&self) -> Result<(), ProtocolError> {
        if self.client_id.is_empty() {
            return Err(ProtocolError::invalid("client_id", "must not be empty"));
        }
        self.face_probe.validate().map_err(|e| ProtocolError::invalid("face_probe", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreetingResponse {
    pub session_id: String,
    pub recognized: bool,
    pub user_id: String,
    pub greeting_text: String,
    pub directive: Directive,
}

impl Message for GreetingResponse {
    fn validate(&self) -> Result<(), ProtocolError> {
        for (field, value) in [
            ("session_id", &self.session_id),
            ("user_id", &self.user_id),
            ("greeting_text", &self.greeting_text),
        ] {
            if value.is_empty() {
                return Err(ProtocolError::invalid(field, "must not be empty"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    FreeText,
    Consent,
}

/// The next question to ask, or the end-of-script sentinel when `done`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionMessage {
    pub question_id: String,
    pub prompt_text: String,
    pub attribute_key: String,
    /// `null` exactly when `done` is true.
    pub kind: Option<QuestionKind>,
    pub done: bool,
}

impl QuestionMessage {
    pub fn done() -> Self {
        Self {
            question_id: String::new(),
            prompt_text: String::new(),
            attribute_key: String::new(),
            kind: None,
            done: true,
        }
    }
}

impl Message for QuestionMessage {
    fn validate(&self) -> Result<(), ProtocolError> {
        let fields = [
            ("question_id", &self.question_id),
            ("prompt_text", &self.prompt_text),
            ("attribute_key", &self.attribute_key),
        ];
        if self.done {
            if let Some((field, _)) = fields.iter().find(|(_, v)| !v.is_empty()) {
                return Err(ProtocolError::invalid(*field, "must be empty when done"));
            }
            if self.kind.is_some() {
                return Err(ProtocolError::invalid("kind", "must be null when done"));
            }
        } else {
            if let Some((field, _)) = fields.iter().find(|(_, v)| v.is_empty()) {
                return Err(ProtocolError::invalid(*field, "must not be empty"));
            }
            if self.kind.is_none() {
                return Err(ProtocolError::invalid("kind", "required unless done"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Audio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerMessage {
    pub question_id: String,
    pub modality: Modality,
    #[serde(with = "base64_bytes")]
    pub payload: Vec<u8>,
}

impl AnswerMessage {
    pub fn text(question_id: impl Into<String>, text: &str) -> Self {
        Self { question_id: question_id.into(), modality: Modality::Text, payload: text.as_bytes().to_vec() }
    }

    pub fn audio(question_id: impl Into<String>, audio: Vec<u8>) -> Self {
        Self { question_id: question_id.into(), modality: Modality::Audio, payload: audio }
    }
}

impl Message for AnswerMessage {
    fn validate(&self) -> Result<(), ProtocolError> {
        if self.question_id.is_empty() {
            return Err(ProtocolError::invalid("question_id", "must not be empty"));
        }
        if self.payload.is_empty() {
            return Err(ProtocolError::invalid("payload", "must not be empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameBatch {
    pub frames: Vec<EmotionFrame>,
}

impl Message for FrameBatch {
    fn validate(&self) -> Result<(), ProtocolError> {
        for (i, frame) in self.frames.iter().enumerate() {
            frame.validate().map_err(|e| ProtocolError::invalid(format!("frames[{i}]"), e))?;
        }
        if let Some(i) = self.frames.windows(2).position(|w| w[1].timestamp < w[0].timestamp) {
            return Err(ProtocolError::invalid(
                format!("frames[{}].timestamp", i + 1),
                "timestamps must be non-decreasing",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerStatus {
    Accepted,
    /// The reply could not be understood; the same question is still pending.
    Reprompt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerAck {
    pub status: AnswerStatus,
    pub directive: Directive,
}

impl Message for AnswerAck {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Robot,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptLine {
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredominantEmotion {
    pub emotion: Emotion,
    pub score: f64,
}

/// Returned when a session ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSummary {
    pub user_id: String,
    pub predominant_emotion: Option<PredominantEmotion>,
    pub interaction_count: u64,
    pub transcript: Vec<TranscriptLine>,
}

impl Message for SessionSummary {
    fn validate(&self) -> Result<(), ProtocolError> {
        if let Some(p) = &self.predominant_emotion {
            if !(0.0..=1.0).contains(&p.score) {
                return Err(ProtocolError::invalid("predominant_emotion.score", "outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl Message for ErrorBody {}

impl Message for UserRecord {
    fn validate(&self) -> Result<(), ProtocolError> {
        UserRecord::validate(self).map_err(|e| ProtocolError::invalid("user", e))
    }
}

mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(deserializer)?;
        STANDARD.decode(s).map_err(de::Error::custom)
    }
}
