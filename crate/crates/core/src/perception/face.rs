use std::collections::BTreeMap;

use super::{FaceRecognizer, FaceTemplate, PerceptionError};

/// Enrolled face templates keyed by user id.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceGallery {
    dim: usize,
    entries: BTreeMap<String, FaceTemplate>,
}

impl FaceGallery {
    pub fn new(dim: usize) -> Self {
        Self { dim, entries: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, user_id: &str) -> bool {
        self.entries.contains_key(user_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &FaceTemplate)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn enroll(&mut self, user_id: &str, template: FaceTemplate) -> Result<(), PerceptionError> {
        template.validate_dim(self.dim)?;
        if self.entries.contains_key(user_id) {
            return Err(PerceptionError::AlreadyEnrolled(user_id.to_string()));
        }
        self.entries.insert(user_id.to_string(), template);
        Ok(())
    }

    pub fn remove(&mut self, user_id: &str) -> Option<FaceTemplate> {
        self.entries.remove(user_id)
    }

    /// Nearest enrolled template by Euclidean distance, accepted when the
    /// distance is at most `threshold`. Equal distances go to the
    /// lexicographically smallest user id.
    pub fn identify(&self, probe: &FaceTemplate, threshold: f64) -> Result<Option<&str>, PerceptionError> {
        if threshold.is_nan() || threshold < 0.0 {
            return Err(PerceptionError::InvalidThreshold(threshold));
        }
        if probe.dim() != self.dim {
            return Err(PerceptionError::Shape { expected: self.dim, actual: probe.dim() });
        }
        let mut best: Option<(&str, f64)> = None;
        // BTreeMap iterates ids in ascending order, so strict `<` keeps the
        // smallest id among equals.
        for (id, template) in &self.entries {
            let d = probe.distance(template);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((id, d));
            }
        }
        Ok(best.filter(|&(_, d)| d <= threshold).map(|(id, _)| id))
    }
}

/// Euclidean nearest neighbour with a distance threshold.
#[derive(Debug, Clone, Copy, Default)]
pub struct NearestNeighbor;

impl FaceRecognizer for NearestNeighbor {
    fn identify(
        &self,
        gallery: &FaceGallery,
        probe: &FaceTemplate,
        threshold: f64,
    ) -> Result<Option<String>, PerceptionError> {
        Ok(gallery.identify(probe, threshold)?.map(str::to_string))
    }
}
