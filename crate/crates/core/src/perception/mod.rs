//! Perception services behind swappable adapters.
//!
//! The brain consumes three services: face recognition, emotion detection
//! and speech-to-text. Each one is a trait here; the implementations in
//! [`mock`] are deterministic and are the ones the server and simulator use.

mod face;
pub mod mock;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::user_model::EmotionScores;

pub use face::{FaceGallery, NearestNeighbor};

/// Template dimension used when nothing else is configured.
pub const DEFAULT_TEMPLATE_DIM: usize = 8;
/// Maximum Euclidean distance accepted as a face match by default.
pub const DEFAULT_FACE_THRESHOLD: f64 = 0.6;

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("face template has dimension {actual}, expected {expected}")]
    Shape { expected: usize, actual: usize },
    #[error("invalid face template: {0}")]
    InvalidTemplate(String),
    #[error("match threshold must be a non-negative number, got {0}")]
    InvalidThreshold(f64),
    #[error("user `{0}` is already enrolled")]
    AlreadyEnrolled(String),
    #[error("empty audio payload")]
    NoInput,
    #[error("transcription failed: {0}")]
    TranscriptionFailed(String),
    #[error("emotion fixture not found: {0}")]
    FixtureNotFound(PathBuf),
    #[error("invalid emotion fixture {path}: {reason}")]
    InvalidFixture { path: PathBuf, reason: String },
    #[error("invalid emotion frame: {0}")]
    InvalidFrame(String),
}

/// Fixed-length face descriptor standing in for a face picture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaceTemplate(Vec<f64>);

impl FaceTemplate {
    pub fn new(components: Vec<f64>) -> Self {
        Self(components)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &FaceTemplate) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Components must be finite and within `[-1, 1]`.
    pub fn validate(&self) -> Result<(), PerceptionError> {
        if self.0.is_empty() {
            return Err(PerceptionError::InvalidTemplate("no components".into()));
        }
        match self.0.iter().position(|c| !(-1.0..=1.0).contains(c)) {
            Some(i) => Err(PerceptionError::InvalidTemplate(format!(
                "component {i} = {} is outside [-1, 1]",
                self.0[i]
            ))),
            None => Ok(()),
        }
    }

    pub fn validate_dim(&self, expected: usize) -> Result<(), PerceptionError> {
        if self.dim() != expected {
            return Err(PerceptionError::Shape { expected, actual: self.dim() });
        }
        self.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Male, Gender::Female];

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeRange {
    #[serde(rename = "0-17")]
    Under18,
    #[serde(rename = "18-24")]
    From18To24,
    #[serde(rename = "25-34")]
    From25To34,
    #[serde(rename = "35-44")]
    From35To44,
    #[serde(rename = "45-54")]
    From45To54,
    #[serde(rename = "55+")]
    Over55,
}

impl AgeRange {
    pub const ALL: [AgeRange; 6] = [
        AgeRange::Under18,
        AgeRange::From18To24,
        AgeRange::From25To34,
        AgeRange::From35To44,
        AgeRange::From45To54,
        AgeRange::Over55,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgeRange::Under18 => "0-17",
            AgeRange::From18To24 => "18-24",
            AgeRange::From25To34 => "25-34",
            AgeRange::From35To44 => "35-44",
            AgeRange::From45To54 => "45-54",
            AgeRange::Over55 => "55+",
        }
    }
}

impl fmt::Display for AgeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One analysed video frame: emotion scores plus demographic estimates,
/// each estimate paired with the detector's confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmotionFrame {
    /// UTC milliseconds.
    pub timestamp: i64,
    pub scores: EmotionScores,
    pub gender: (Gender, f64),
    pub age_range: (AgeRange, f64),
}

impl EmotionFrame {
    pub fn validate(&self) -> Result<(), PerceptionError> {
        if let Some((emotion, score)) = self.scores.out_of_range() {
            return Err(PerceptionError::InvalidFrame(format!("{emotion} score {score} is outside [0, 1]")));
        }
        for (what, conf) in [("gender", self.gender.1), ("age_range", self.age_range.1)] {
            if !(0.0..=1.0).contains(&conf) {
                return Err(PerceptionError::InvalidFrame(format!(
                    "{what} confidence {conf} is outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Speech-to-text service.
pub trait Transcriber: Send + Sync {
    fn transcribe(&self, audio: &[u8]) -> Result<String, PerceptionError>;
}

/// Emotion analysis over a media source identified by `media_ref`.
pub trait EmotionDetector: Send + Sync {
    /// Frames come back ordered by timestamp.
    fn detect_emotions(&self, media_ref: &str) -> Result<Vec<EmotionFrame>, PerceptionError>;
}

/// Face recognition against the gallery of enrolled users.
pub trait FaceRecognizer: Send + Sync {
    fn identify(
        &self,
        gallery: &FaceGallery,
        probe: &FaceTemplate,
        threshold: f64,
    ) -> Result<Option<String>, PerceptionError>;
}
