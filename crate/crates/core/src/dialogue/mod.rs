//! Slot-filling conversation engine.
//!
//! A conversation opens with a greeting, then walks the [`QuestionScript`]
//! asking for the first attribute the user model does not hold yet, and
//! ends when every scripted attribute is filled. The engine is pure over
//! `(SessionState, UserRecord)` pairs; the server owns the storage.

mod script;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::{EmotionFrame, PerceptionError, Transcriber};
use crate::protocol::{AnswerMessage, Modality, QuestionKind, QuestionMessage, Speaker, TranscriptLine};
use crate::user_model::{AttributeSchema, ModelError, Source, UserRecord};

pub use script::{QuestionScript, ScriptEntry};

#[derive(Debug, Error, PartialEq)]
pub enum DialogueError {
    #[error("session is {0:?}, operation not allowed")]
    SessionState(Phase),
    #[error("answer for `{got}` but {expected}")]
    ProtocolOrder { expected: String, got: String },
    #[error("answer text is not valid UTF-8")]
    InvalidText,
    #[error(transparent)]
    Transcription(#[from] PerceptionError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Greeted, no question asked yet.
    Greeting,
    Questioning,
    Done,
}

/// One live conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub session_id: String,
    pub user_id: String,
    phase: Phase,
    pending_question: Option<String>,
    frames: Vec<EmotionFrame>,
    transcript: Vec<TranscriptLine>,
}

impl SessionState {
    pub fn new(session_id: impl Into<String>, user_id: impl Into<String>, greeting: &str) -> Self {
        Self {
            session_id: session_id.into(),
            user_id: user_id.into(),
            phase: Phase::Greeting,
            pending_question: None,
            frames: Vec::new(),
            transcript: vec![TranscriptLine { speaker: Speaker::Robot, text: greeting.to_string() }],
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn pending_question(&self) -> Option<&str> {
        self.pending_question.as_deref()
    }

    pub fn frames(&self) -> &[EmotionFrame] {
        &self.frames
    }

    pub fn push_frames(&mut self, frames: impl IntoIterator<Item = EmotionFrame>) {
        self.frames.extend(frames);
    }

    pub fn transcript(&self) -> &[TranscriptLine] {
        &self.transcript
    }
}

/// Accepted spellings of a yes/no consent reply, compared case-insensitively.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsentVocabulary {
    pub yes: Vec<String>,
    pub no: Vec<String>,
}

impl Default for ConsentVocabulary {
    fn default() -> Self {
        let words = |ws: &[&str]| ws.iter().map(|w| w.to_string()).collect();
        Self {
            yes: words(&["yes", "y", "yeah", "yep", "sure", "ok", "okay", "of course"]),
            no: words(&["no", "n", "nope", "no thanks", "not really"]),
        }
    }
}

impl ConsentVocabulary {
    pub fn parse(&self, reply: &str) -> Option<bool> {
        let normalized = reply.trim().trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
        let hit = |words: &[String]| words.iter().any(|w| w.to_lowercase() == normalized);
        if hit(&self.yes) {
            Some(true)
        } else if hit(&self.no) {
            Some(false)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnswerOutcome {
    Accepted,
    /// The reply did not fill the slot; the same question stays pending.
    Reprompt,
}

pub const GENERIC_WELCOME: &str = "Hello! Welcome, I don't think we have met before.";
const MOOD_FOLLOW_UP: &str = "Do you feel better today?";

/// Opening line for a visitor.
///
/// Returning users are greeted by name; if their last recorded interaction
/// was dominated by a negative emotion the robot also asks about their mood.
pub fn greeting_for(record: &UserRecord, recognized: bool) -> String {
    if !recognized {
        return GENERIC_WELCOME.to_string();
    }
    let mut greeting = match record.attribute("name") {
        Some(name) => format!("Hello {}!", name.value),
        None => "Hello again!".to_string(),
    };
    if record.last_emotion().is_some_and(|e| e.is_negative()) {
        greeting.push(' ');
        greeting.push_str(MOOD_FOLLOW_UP);
    }
    greeting
}

#[derive(Debug, Clone)]
pub struct DialogueEngine {
    script: QuestionScript,
    schema: AttributeSchema,
    consent: ConsentVocabulary,
}

impl DialogueEngine {
    pub fn new(script: QuestionScript, schema: AttributeSchema, consent: ConsentVocabulary) -> Self {
        Self { script, schema, consent }
    }

    pub fn script(&self) -> &QuestionScript {
        &self.script
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    /// The first scripted question whose attribute the record lacks, or the
    /// `done` sentinel once every slot is filled. Asking again before
    /// answering returns the same question.
    pub fn next_question(
        &self,
        state: &mut SessionState,
        record: &UserRecord,
    ) -> Result<QuestionMessage, DialogueError> {
        if state.phase == Phase::Done {
            return Err(DialogueError::SessionState(Phase::Done));
        }
        let entry = match &state.pending_question {
            Some(id) => self.script.get(id),
            None => self.script.entries().iter().find(|e| !record.has_attribute(&e.attribute_key)),
        };
        match entry {
            Some(e) => {
                state.phase = Phase::Questioning;
                state.pending_question = Some(e.question_id.clone());
                Ok(question_message(e))
            }
            None => {
                state.phase = Phase::Done;
                state.pending_question = None;
                Ok(QuestionMessage::done())
            }
        }
    }

    /// Fills the pending question's slot from the user's reply.
    pub fn apply_answer(
        &self,
        state: &mut SessionState,
        record: &mut UserRecord,
        answer: &AnswerMessage,
        transcriber: &dyn Transcriber,
        now_ms: i64,
    ) -> Result<AnswerOutcome, DialogueError> {
        if state.phase == Phase::Done {
            return Err(DialogueError::SessionState(Phase::Done));
        }
        let Some(pending) = state.pending_question.clone() else {
            return Err(DialogueError::ProtocolOrder {
                expected: "no question is pending".into(),
                got: answer.question_id.clone(),
            });
        };
        if answer.question_id != pending {
            return Err(DialogueError::ProtocolOrder {
                expected: format!("`{pending}` is pending"),
                got: answer.question_id.clone(),
            });
        }
        let entry = self.script.get(&pending).expect("pending question comes from the script");

        let text = match answer.modality {
            Modality::Text => {
                String::from_utf8(answer.payload.clone()).map_err(|_| DialogueError::InvalidText)?
            }
            Modality::Audio => transcriber.transcribe(&answer.payload)?,
        };
        let text = text.trim();
        if text.is_empty() {
            return Ok(AnswerOutcome::Reprompt);
        }

        match entry.kind {
            QuestionKind::Consent => {
                let Some(consent) = self.consent.parse(text) else {
                    return Ok(AnswerOutcome::Reprompt);
                };
                let value = if consent { "yes" } else { "no" };
                record.upsert_attribute(
                    &self.schema,
                    &entry.attribute_key,
                    value,
                    1.0,
                    Source::Explicit,
                    now_ms,
                )?;
                record.set_consent(consent);
            }
            QuestionKind::FreeText => {
                record.upsert_attribute(
                    &self.schema,
                    &entry.attribute_key,
                    text,
                    1.0,
                    Source::Explicit,
                    now_ms,
                )?;
            }
        }

        state.transcript.push(TranscriptLine { speaker: Speaker::Robot, text: entry.prompt_text.clone() });
        state.transcript.push(TranscriptLine { speaker: Speaker::User, text: text.to_string() });
        state.pending_question = None;
        Ok(AnswerOutcome::Accepted)
    }
}

fn question_message(e: &ScriptEntry) -> QuestionMessage {
    QuestionMessage {
        question_id: e.question_id.clone(),
        prompt_text: e.prompt_text.clone(),
        attribute_key: e.attribute_key.clone(),
        kind: Some(e.kind),
        done: false,
    }
}
