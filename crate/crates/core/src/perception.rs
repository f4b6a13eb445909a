//! Desk-scale lane-following stack: a classical lane-center estimator,
//! synthetic track fixtures with exact ground truth, and the prediction
//! JSONL bridge for externally produced model outputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degrade::{ImageBuffer, DEFAULT_SIDE, MIN_SIDE};
use crate::rng::{self, CounterRng};

/// Returned when too few pixels stand out from the road.
pub const FALLBACK_POINT: LanePoint = LanePoint { x: 0.5, y: 0.75 };

/// Pixels must reach `mean + THRESHOLD_SIGMAS * std` of the bottom-half luma.
pub const THRESHOLD_SIGMAS: f64 = 1.0;
pub const MIN_LANE_PIXELS: usize = 10;

/// Fixture geometry (224x224 frames).
pub const ROAD_LEVEL: f64 = 40.0;
pub const STRIPE_LEVEL: f64 = 230.0;
pub const FIXTURE_NOISE_SIGMA: f64 = 4.0;
pub const STRIPE_WIDTH: f64 = 9.0;
/// Look-ahead row on which the stripe is centered.
pub const LOOKAHEAD_ROW: u32 = 168;
/// The stripe is a lane dash spanning `LOOKAHEAD_ROW ± DASH_HALF_LENGTH` rows.
pub const DASH_HALF_LENGTH: u32 = 24;
pub const TRUTH_X_RANGE: (f64, f64) = (0.2, 0.8);

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("image {0}x{1} is below the {min}x{min} minimum", min = MIN_SIDE)]
    UnsupportedSize(u32, u32),
    #[error("line {line_no}: {message}")]
    Schema { line_no: usize, message: String },
    #[error("prediction file is not valid UTF-8: {0}")]
    Decode(String),
    #[error("coordinate ({0}, {1}) outside the unit square")]
    OutOfRange(f64, f64),
}

/// Normalized image coordinate; `x` by width, `y` by height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanePoint {
    pub x: f64,
    pub y: f64,
}

impl LanePoint {
    pub fn new(x: f64, y: f64) -> Result<Self, PerceptionError> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(PerceptionError::OutOfRange(x, y));
        }
        Ok(Self { x, y })
    }

    pub fn to_pixels(self, width: u32, height: u32) -> (f64, f64) {
        (self.x * width as f64, self.y * height as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub image_id: String,
    /// Fault folder the sample came from, e.g. `FOG_SLIGHT_015` or `NORMAL`.
    pub group: String,
    pub truth: LanePoint,
    pub prediction: LanePoint,
}

fn luma(p: &[u8]) -> f64 {
    0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
}

/// Intensity-weighted centroid of the bright pixels in the bottom half.
pub fn estimate_lane_center(image: &ImageBuffer) -> Result<LanePoint, PerceptionError> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    if image.width() < MIN_SIDE || image.height() < MIN_SIDE {
        return Err(PerceptionError::UnsupportedSize(image.width(), image.height()));
    }
    let top = h / 2;
    let region = &image.pixels()[top * w * 3..];
    let lumas: Vec<f64> = region.chunks_exact(3).map(luma).collect();
    let n = lumas.len() as f64;
    let mean = lumas.iter().sum::<f64>() / n;
    let std = (lumas.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n).sqrt();
    // A flat region has nothing to lock onto.
    if std < 1e-9 {
        return Ok(FALLBACK_POINT);
    }
    let cut = mean + THRESHOLD_SIGMAS * std;
    let (mut count, mut weight, mut sx, mut sy) = (0usize, 0.0, 0.0, 0.0);
    for (i, &l) in lumas.iter().enumerate() {
        if l >= cut {
            count += 1;
            weight += l;
            sx += l * (i % w) as f64;
            sy += l * (top + i / w) as f64;
        }
    }
    if count < MIN_LANE_PIXELS || weight <= 0.0 {
        return Ok(FALLBACK_POINT);
    }
    Ok(LanePoint {
        x: (sx / weight / w as f64).clamp(0.0, 1.0),
        y: (sy / weight / h as f64).clamp(0.0, 1.0),
    })
}

/// Renders one 224x224 track frame with the stripe centered at `truth_x` on the look-ahead row.
pub fn render_track(truth_x: f64, seed: u64) -> ImageBuffer {
    let side = DEFAULT_SIDE;
    let rng = CounterRng::new(seed);
    let center = truth_x * side as f64;
    let dash = LOOKAHEAD_ROW - DASH_HALF_LENGTH..=LOOKAHEAD_ROW + DASH_HALF_LENGTH;
    ImageBuffer::from_fn(side, side, |x, y| {
        let on_stripe = dash.contains(&y) && (x as f64 - center).abs() <= STRIPE_WIDTH / 2.0;
        let base = if on_stripe { STRIPE_LEVEL } else { ROAD_LEVEL };
        let v = base + FIXTURE_NOISE_SIGMA * rng.normal(0, (y * side + x) as u64);
        [v.clamp(0.0, 255.0).round_ties_even() as u8; 3]
    })
}

/// Deterministic synthetic track frames with exact ground truth.
///
/// # Panics
///
/// Panics if `count` is zero.
pub fn gen_synthetic_track(count: usize, master_seed: u64) -> Vec<(ImageBuffer, LanePoint)> {
    assert!(count >= 1, "count must be positive");
    (0..count)
        .map(|i| {
            let seed = rng::split(master_seed, i as u64);
            let u = CounterRng::new(seed).uniform(1, 0);
            let x = TRUTH_X_RANGE.0 + (TRUTH_X_RANGE.1 - TRUTH_X_RANGE.0) * u;
            let truth = LanePoint { x, y: LOOKAHEAD_ROW as f64 / DEFAULT_SIDE as f64 };
            (render_track(x, seed), truth)
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireRecord {
    image_id: String,
    group: String,
    gt_x: f64,
    gt_y: f64,
    pred_x: f64,
    pred_y: f64,
}

pub fn read_predictions(bytes: &[u8]) -> Result<Vec<PredictionRecord>, PerceptionError> {
    let text = std::str::from_utf8(bytes).map_err(|e| PerceptionError::Decode(e.to_string()))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| PerceptionError::Schema { line_no, message };
        let w: WireRecord = serde_json::from_str(line).map_err(|e| schema(e.to_string()))?;
        if w.group.trim().is_empty() {
            return Err(schema("empty group".into()));
        }
        let truth = LanePoint::new(w.gt_x, w.gt_y).map_err(|e| schema(format!("ground truth {e}")))?;
        let prediction =
            LanePoint::new(w.pred_x, w.pred_y).map_err(|e| schema(format!("prediction {e}")))?;
        out.push(PredictionRecord { image_id: w.image_id, group: w.group, truth, prediction });
    }
    Ok(out)
}

pub fn write_predictions(records: &[PredictionRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        let w = WireRecord {
            image_id: r.image_id.clone(),
            group: r.group.clone(),
            gt_x: r.truth.x,
            gt_y: r.truth.y,
            pred_x: r.prediction.x,
            pred_y: r.prediction.y,
        };
        serde_json::to_writer(&mut out, &w).expect("record serialization is infallible");
        out.push(b'\n');
    }
    out
}
