use std::collections::HashMap;

use super::{GenAiError, ScoreRequest};
use crate::degrade::{degradation_magnitude, ImageBuffer};

/// Stub calibration: the magnitude a faithful synthesis should show at `strength`.
pub fn expected_magnitude(strength: f64) -> f64 {
    0.4 * strength
}

/// Proxy scorer: `1 - |expected_magnitude(s) - degradation_magnitude(base, image)|`
/// when a base is registered for the image id, else 0.
#[derive(Debug, Default, Clone)]
pub struct StubScorer {
    bases: HashMap<String, ImageBuffer>,
}

impl StubScorer {
    pub fn register(&mut self, image_id: impl Into<String>, base: ImageBuffer) {
        self.bases.insert(image_id.into(), base);
    }

    pub fn score(&self, req: &ScoreRequest<'_>) -> Result<f64, GenAiError> {
        let Some(base) = self.bases.get(req.image_id) else {
            return Ok(0.0);
        };
        let observed = degradation_magnitude(base, req.image)?;
        Ok((1.0 - (expected_magnitude(req.strength) - observed).abs()).clamp(-1.0, 1.0))
    }
}
