//! Scenario files for scripted runs.
//!
//! ```json
//! {
//!   "client_id": "sanbot-demo",
//!   "face": "fixtures/cristina_face.json",
//!   "emotions": "fixtures/sad.json",
//!   "replies": ["Cristina", "yes", "researcher", "blue", "tennis"],
//!   "expected_transcript": "first_visit.txt"
//! }
//! ```
//!
//! `face` is either an inline vector or a path to a JSON vector. Relative
//! paths resolve against the scenario file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use brain_core::perception::mock::FixtureEmotionDetector;
use brain_core::perception::{EmotionFrame, FaceTemplate, PerceptionError};
use serde::Deserialize;

use crate::Visit;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid scenario {path}: {reason}")]
    Invalid { path: PathBuf, reason: String },
    #[error(transparent)]
    Fixture(#[from] PerceptionError),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum FaceSpec {
    Vector(FaceTemplate),
    Fixture(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default = "default_client_id")]
    client_id: String,
    face: FaceSpec,
    #[serde(default)]
    emotions: Option<PathBuf>,
    #[serde(default)]
    replies: Vec<String>,
    #[serde(default)]
    expected_transcript: Option<PathBuf>,
    #[serde(default)]
    audio: bool,
}

fn default_client_id() -> String {
    "simulator".to_string()
}

/// A scenario with its fixtures loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub client_id: String,
    pub face: FaceTemplate,
    pub frames: Vec<EmotionFrame>,
    pub replies: Vec<String>,
    pub expected_transcript: Option<PathBuf>,
    pub audio: bool,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
        let raw: RawScenario = serde_json::from_str(&text)
            .map_err(|e| ScenarioError::Invalid { path: path.to_path_buf(), reason: e.to_string() })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let face = match raw.face {
            FaceSpec::Vector(t) => t,
            FaceSpec::Fixture(p) => load_face(&dir.join(p))?,
        };
        face.validate()?;
        let frames = match &raw.emotions {
            Some(p) => FixtureEmotionDetector::load(&dir.join(p))?,
            None => Vec::new(),
        };
        Ok(Self {
            client_id: raw.client_id,
            face,
            frames,
            replies: raw.replies,
            expected_transcript: raw.expected_transcript.map(|p| dir.join(p)),
            audio: raw.audio,
        })
    }

    pub fn visit(&self) -> Visit {
        Visit {
            client_id: self.client_id.clone(),
            face: self.face.clone(),
            frames: self.frames.clone(),
            audio: self.audio,
        }
    }
}

/// Reads a face template stored as a JSON array.
pub fn load_face(path: &Path) -> Result<FaceTemplate, PerceptionError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => PerceptionError::FixtureNotFound(path.to_path_buf()),
        _ => PerceptionError::InvalidFixture { path: path.to_path_buf(), reason: e.to_string() },
    })?;
    let face: FaceTemplate = serde_json::from_str(&text)
        .map_err(|e| PerceptionError::InvalidFixture { path: path.to_path_buf(), reason: e.to_string() })?;
    face.validate()?;
    Ok(face)
}
