//! Session orchestration behind the HTTP endpoints.
//!
//! Locking: each session and each user record has its own mutex, taken in
//! that order (session, then user) and never held across a store write.
//! The session and user maps are sharded, so unrelated sessions and users
//! never wait on each other except while the store file is rewritten.

use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::Instant;

use brain_core::adaptation::RuleSet;
use brain_core::dialogue::{
    greeting_for, AnswerOutcome, ConsentVocabulary, DialogueEngine, QuestionScript, SessionState,
};
use brain_core::now_millis;
use brain_core::perception::mock::IdentityTranscriber;
use brain_core::perception::{
    AgeRange, EmotionFrame, FaceGallery, FaceRecognizer, FaceTemplate, Gender, NearestNeighbor, Transcriber,
};
use brain_core::protocol::{
    AnswerAck, AnswerMessage, AnswerStatus, Directive, FrameBatch, GreetingResponse, PredominantEmotion,
    QuestionMessage, SessionHello, SessionSummary,
};
use brain_core::user_model::{predominant_emotion, AttributeSchema, Emotion, Source, UserRecord, UserStore};
use dashmap::DashMap;
use uuid::Uuid;

use crate::config::ServerConfig;
use crate::error::{BrainError, StartupError};

struct Session {
    state: SessionState,
    probe: FaceTemplate,
    dominant: Option<(Emotion, f64)>,
    summary: Option<SessionSummary>,
    last_activity: Instant,
}

pub struct Brain {
    config: ServerConfig,
    engine: DialogueEngine,
    rules: RuleSet,
    recognizer: Arc<dyn FaceRecognizer>,
    transcriber: Arc<dyn Transcriber>,
    users: DashMap<String, Arc<Mutex<UserRecord>>>,
    gallery: RwLock<FaceGallery>,
    sessions: DashMap<String, Arc<Mutex<Session>>>,
    store_write: Mutex<()>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl Brain {
    /// Loads configuration files and the user store, using the mock
    /// transcriber and Euclidean face matching.
    pub fn open(config: ServerConfig) -> Result<Self, StartupError> {
        Self::with_adapters(config, Arc::new(NearestNeighbor), Arc::new(IdentityTranscriber))
    }

    pub fn with_adapters(
        config: ServerConfig,
        recognizer: Arc<dyn FaceRecognizer>,
        transcriber: Arc<dyn Transcriber>,
    ) -> Result<Self, StartupError> {
        config.validate()?;
        let schema = match &config.schema_path {
            Some(p) => AttributeSchema::load(p)?,
            None => AttributeSchema::default(),
        };
        let script = match &config.script_path {
            Some(p) => QuestionScript::load(p, &schema)?,
            None => QuestionScript::default_for(&schema)?,
        };
        let rules = match &config.rules_path {
            Some(p) => RuleSet::load(p, &schema)?,
            None => RuleSet::default_for(&schema)?,
        };
        let store = UserStore::load_or_default(&config.store_path)?;

        let mut gallery = FaceGallery::new(config.template_dim);
        let users = DashMap::new();
        for record in store.into_records() {
            if let Some(t) = record.face_template() {
                gallery
                    .enroll(record.user_id(), t.clone())
                    .map_err(|e| StartupError::Config(format!("user `{}`: {e}", record.user_id())))?;
            }
            users.insert(record.user_id().to_string(), Arc::new(Mutex::new(record)));
        }

        Ok(Self {
            engine: DialogueEngine::new(script, schema, ConsentVocabulary::default()),
            config,
            rules,
            recognizer,
            transcriber,
            users,
            gallery: RwLock::new(gallery),
            sessions: DashMap::new(),
            store_write: Mutex::new(()),
        })
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    fn session(&self, session_id: &str) -> Result<Arc<Mutex<Session>>, BrainError> {
        self.sessions
            .get(session_id)
            .map(|s| Arc::clone(&s))
            .ok_or_else(|| BrainError::SessionNotFound(session_id.to_string()))
    }

    fn user(&self, user_id: &str) -> Result<Arc<Mutex<UserRecord>>, BrainError> {
        self.users
            .get(user_id)
            .map(|u| Arc::clone(&u))
            .ok_or_else(|| BrainError::UserNotFound(user_id.to_string()))
    }

    /// Rewrites the store file from a snapshot of every record.
    fn persist(&self) -> Result<(), BrainError> {
        let _writer = lock(&self.store_write);
        let records: Vec<Arc<Mutex<UserRecord>>> = self.users.iter().map(|e| Arc::clone(e.value())).collect();
        let store: UserStore = records.iter().map(|r| lock(r).clone()).collect();
        store.save(&self.config.store_path)?;
        Ok(())
    }

    pub fn start_session(&self, hello: &SessionHello) -> Result<GreetingResponse, BrainError> {
        hello.face_probe.validate_dim(self.config.template_dim)?;
        let matched = {
            let gallery = self.gallery.read().unwrap_or_else(|p| p.into_inner());
            self.recognizer.identify(&gallery, &hello.face_probe, self.config.face_threshold)?
        };

        let (record, recognized) = match matched.and_then(|id| self.users.get(&id).map(|u| Arc::clone(&u))) {
            Some(user) => (lock(&user).clone(), true),
            None => {
                let record = UserRecord::new(Uuid::new_v4().to_string());
                self.users.insert(record.user_id().to_string(), Arc::new(Mutex::new(record.clone())));
                self.persist()?;
                (record, false)
            }
        };

        let greeting = greeting_for(&record, recognized);
        let directive = self.rules.evaluate(&record, record.last_emotion());
        let session_id = Uuid::new_v4().to_string();
        let session = Session {
            state: SessionState::new(&session_id, record.user_id(), &greeting),
            probe: hello.face_probe.clone(),
            dominant: None,
            summary: None,
            last_activity: Instant::now(),
        };
        self.sessions.insert(session_id.clone(), Arc::new(Mutex::new(session)));
        tracing::info!(%session_id, user_id = record.user_id(), recognized, "session started");

        Ok(GreetingResponse {
            session_id,
            recognized,
            user_id: record.user_id().to_string(),
            greeting_text: greeting,
            directive,
        })
    }

    pub fn next_question(&self, session_id: &str) -> Result<QuestionMessage, BrainError> {
        let session = self.session(session_id)?;
        let mut session = lock(&session);
        session.last_activity = Instant::now();
        if session.summary.is_some() {
            return Err(BrainError::SessionEnded(session_id.to_string()));
        }
        let user = self.user(&session.state.user_id)?;
        let record = lock(&user);
        Ok(self.engine.next_question(&mut session.state, &record)?)
    }

    pub fn post_answer(&self, session_id: &str, answer: &AnswerMessage) -> Result<AnswerAck, BrainError> {
        let session = self.session(session_id)?;
        let mut session = lock(&session);
        session.last_activity = Instant::now();
        if session.summary.is_some() {
            return Err(BrainError::SessionEnded(session_id.to_string()));
        }
        let user = self.user(&session.state.user_id)?;
        let mut record = lock(&user);
        let outcome = self.engine.apply_answer(
            &mut session.state,
            &mut record,
            answer,
            self.transcriber.as_ref(),
            now_millis(),
        )?;
        let status = match outcome {
            AnswerOutcome::Accepted => AnswerStatus::Accepted,
            AnswerOutcome::Reprompt => AnswerStatus::Reprompt,
        };
        let directive = self.rules.evaluate(&record, session.dominant.map(|(e, _)| e));
        Ok(AnswerAck { status, directive })
    }

    /// Appends frames, refreshes the dominant emotion over the whole
    /// session, and folds the batch's gender and age estimates into the
    /// user model.
    pub fn post_frames(&self, session_id: &str, batch: &FrameBatch) -> Result<Directive, BrainError> {
        if batch.frames.is_empty() {
            return Err(BrainError::Validation("frame batch is empty".into()));
        }
        let session = self.session(session_id)?;
        let mut session = lock(&session);
        session.last_activity = Instant::now();
        if session.summary.is_some() {
            return Err(BrainError::SessionEnded(session_id.to_string()));
        }
        session.state.push_frames(batch.frames.iter().cloned());
        let dominant = predominant_emotion(session.state.frames().iter().map(|f| &f.scores))?;
        session.dominant = Some(dominant);

        let user = self.user(&session.state.user_id)?;
        let mut record = lock(&user);
        let schema = self.engine.schema();
        let now = now_millis();
        if let Some((gender, certainty)) = batch_estimate(&batch.frames, |f| f.gender, &Gender::ALL) {
            record.upsert_attribute(schema, "gender", gender.as_str(), certainty, Source::Implicit, now)?;
        }
        if let Some((age, certainty)) = batch_estimate(&batch.frames, |f| f.age_range, &AgeRange::ALL) {
            record.upsert_attribute(schema, "age_range", age.as_str(), certainty, Source::Implicit, now)?;
        }
        Ok(self.rules.evaluate(&record, Some(dominant.0)))
    }

    /// Closes the interaction. Calling it again returns the same summary.
    pub fn end_session(&self, session_id: &str) -> Result<SessionSummary, BrainError> {
        let session = self.session(session_id)?;
        let mut session = lock(&session);
        session.last_activity = Instant::now();
        if let Some(summary) = &session.summary {
            return Ok(summary.clone());
        }

        let user = self.user(&session.state.user_id)?;
        let predominant = predominant_emotion(session.state.frames().iter().map(|f| &f.scores)).ok();
        let summary = {
            let mut record = lock(&user);
            record.record_interaction(predominant);
            if record.consent() && record.face_template().is_none() {
                record.attach_face_template(session.probe.clone())?;
            }
            if let Some(t) = record.face_template() {
                let mut gallery = self.gallery.write().unwrap_or_else(|p| p.into_inner());
                if !gallery.contains(record.user_id()) {
                    gallery.enroll(record.user_id(), t.clone())?;
                }
            }
            SessionSummary {
                user_id: record.user_id().to_string(),
                predominant_emotion: predominant
                    .map(|(emotion, score)| PredominantEmotion { emotion, score }),
                interaction_count: record.interaction_count(),
                transcript: session.state.transcript().to_vec(),
            }
        };
        session.summary = Some(summary.clone());
        tracing::info!(session_id, user_id = %summary.user_id, "session ended");
        self.persist()?;
        Ok(summary)
    }

    pub fn get_user(&self, user_id: &str) -> Result<UserRecord, BrainError> {
        let user = self.user(user_id)?;
        let record = lock(&user).clone();
        Ok(record)
    }

    /// Drops sessions idle for longer than the configured timeout and
    /// returns how many were removed. User records are untouched.
    pub fn reap_idle(&self, now: Instant) -> usize {
        let timeout = self.config.session_timeout();
        let before = self.sessions.len();
        self.sessions.retain(|_, s| {
            let s = lock(s);
            now.saturating_duration_since(s.last_activity) <= timeout
        });
        before - self.sessions.len()
    }
}

/// Picks the value with the largest summed confidence across a batch (ties
/// by `order`), reporting the mean confidence of the frames that chose it.
fn batch_estimate<T: Copy + PartialEq>(
    frames: &[EmotionFrame],
    estimate: impl Fn(&EmotionFrame) -> (T, f64),
    order: &[T],
) -> Option<(T, f64)> {
    let mut best: Option<(T, f64, usize)> = None;
    for &value in order {
        let (sum, n) = frames
            .iter()
            .map(&estimate)
            .filter(|(v, _)| *v == value)
            .fold((0.0, 0usize), |(s, n), (_, c)| (s + c, n + 1));
        if n > 0 && best.is_none_or(|(_, bs, _)| sum > bs) {
            best = Some((value, sum, n));
        }
    }
    best.map(|(v, sum, n)| (v, sum / n as f64))
}
