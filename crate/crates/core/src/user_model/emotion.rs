//! The seven-emotion vocabulary and per-interaction aggregation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// One of the seven basic emotions reported by the emotion detector.
///
/// Declaration order is the fixed tie-break order: when two emotions score
/// the same, the one declared first wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Sadness,
    Anger,
    Disgust,
    Joy,
    Fear,
    Surprise,
    Contempt,
}

impl Emotion {
    pub const ALL: [Emotion; 7] = [
        Emotion::Sadness,
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Joy,
        Emotion::Fear,
        Emotion::Surprise,
        Emotion::Contempt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Sadness => "sadness",
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Joy => "joy",
            Emotion::Fear => "fear",
            Emotion::Surprise => "surprise",
            Emotion::Contempt => "contempt",
        }
    }

    /// Emotions that trigger a mood follow-up when greeting a returning user.
    pub fn is_negative(self) -> bool {
        !matches!(self, Emotion::Joy | Emotion::Surprise)
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Emotion::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ModelError::UnknownEmotion(s.to_string()))
    }
}

/// Scores for all seven emotions, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmotionScores {
    pub sadness: f64,
    pub anger: f64,
    pub disgust: f64,
    pub joy: f64,
    pub fear: f64,
    pub surprise: f64,
    pub contempt: f64,
}

impl EmotionScores {
    pub fn get(&self, emotion: Emotion) -> f64 {
        match emotion {
            Emotion::Sadness => self.sadness,
            Emotion::Anger => self.anger,
            Emotion::Disgust => self.disgust,
            Emotion::Joy => self.joy,
            Emotion::Fear => self.fear,
            Emotion::Surprise => self.surprise,
            Emotion::Contempt => self.contempt,
        }
    }

    pub fn set(&mut self, emotion: Emotion, score: f64) {
        let slot = match emotion {
            Emotion::Sadness => &mut self.sadness,
            Emotion::Anger => &mut self.anger,
            Emotion::Disgust => &mut self.disgust,
            Emotion::Joy => &mut self.joy,
            Emotion::Fear => &mut self.fear,
            Emotion::Surprise => &mut self.surprise,
            Emotion::Contempt => &mut self.contempt,
        };
        *slot = score;
    }

    pub fn with(mut self, emotion: Emotion, score: f64) -> Self {
        self.set(emotion, score);
        self
    }

    pub fn uniform(score: f64) -> Self {
        let mut scores = Self::default();
        for e in Emotion::ALL {
            scores.set(e, score);
        }
        scores
    }

    pub fn iter(&self) -> impl Iterator<Item = (Emotion, f64)> + '_ {
        Emotion::ALL.into_iter().map(|e| (e, self.get(e)))
    }

    /// Returns the first emotion whose score is not a finite value in `[0, 1]`.
    pub fn out_of_range(&self) -> Option<(Emotion, f64)> {
        self.iter().find(|(_, s)| !(0.0..=1.0).contains(s))
    }
}

/// The interaction's dominant emotion: argmax of the per-emotion mean over
/// all frames, ties resolved by [`Emotion::ALL`] order.
pub fn predominant_emotion<'a, I>(frames: I) -> Result<(Emotion, f64), ModelError>
where
    I: IntoIterator<Item = &'a EmotionScores>,
{
    let mut sums = [0.0f64; 7];
    let mut count = 0usize;
    for frame in frames {
        for (slot, (_, score)) in sums.iter_mut().zip(frame.iter()) {
            *slot += score;
        }
        count += 1;
    }
    if count == 0 {
        return Err(ModelError::NoData);
    }

    let mut best = (Emotion::ALL[0], sums[0] / count as f64);
    for (emotion, sum) in Emotion::ALL.into_iter().zip(sums).skip(1) {
        let mean = sum / count as f64;
        if mean > best.1 {
            best = (emotion, mean);
        }
    }
    Ok(best)
}
