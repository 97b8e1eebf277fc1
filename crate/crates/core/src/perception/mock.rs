//! Deterministic stand-ins for the perception services.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::{EmotionDetector, EmotionFrame, PerceptionError, Transcriber};

/// Treats the audio payload as UTF-8 text.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTranscriber;

impl Transcriber for IdentityTranscriber {
    fn transcribe(&self, audio: &[u8]) -> Result<String, PerceptionError> {
        if audio.is_empty() {
            return Err(PerceptionError::NoInput);
        }
        std::str::from_utf8(audio)
            .map(str::to_string)
            .map_err(|e| PerceptionError::TranscriptionFailed(e.to_string()))
    }
}

/// Reads frames from JSON fixture files. Relative media references resolve
/// against `root`.
#[derive(Debug, Clone, Default)]
pub struct FixtureEmotionDetector {
    root: PathBuf,
}

impl FixtureEmotionDetector {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn load(path: &Path) -> Result<Vec<EmotionFrame>, PerceptionError> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => PerceptionError::FixtureNotFound(path.to_path_buf()),
            _ => PerceptionError::InvalidFixture { path: path.to_path_buf(), reason: e.to_string() },
        })?;
        let invalid = |reason: String| PerceptionError::InvalidFixture { path: path.to_path_buf(), reason };
        let mut frames: Vec<EmotionFrame> =
            serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?;
        for (i, frame) in frames.iter().enumerate() {
            frame.validate().map_err(|e| invalid(format!("frame {i}: {e}")))?;
        }
        // Stable, so equal timestamps keep fixture order.
        frames.sort_by_key(|f| f.timestamp);
        Ok(frames)
    }
}

impl EmotionDetector for FixtureEmotionDetector {
    fn detect_emotions(&self, media_ref: &str) -> Result<Vec<EmotionFrame>, PerceptionError> {
        Self::load(&self.root.join(media_ref))
    }
}
