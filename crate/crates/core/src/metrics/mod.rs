//! Regression and localization metrics over lane-center predictions.
//!
//! "Overall" statistics pool the x and y residuals into a single `2n`
//! sample. Within-ε accuracy uses the Euclidean spatial error.

pub mod report;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::perception::PredictionRecord;

/// Frame edge used for pixel-form errors.
pub const FRAME_PIXELS: f64 = 224.0;

pub const WITHIN_TIGHT: f64 = 0.10;
pub const WITHIN_LOOSE: f64 = 0.20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {0} truths vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("truth values have zero variance but residuals are non-zero")]
    DegenerateVariance,
    #[error("group `{group}` has {n} sample(s); at least 2 are required")]
    EmptyGroup { group: String, n: usize },
}

/// Per-group aggregate. `None` in an R² field marks degenerate truth variance.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub group: String,
    pub n: usize,
    pub r2_overall: Option<f64>,
    pub r2_x: Option<f64>,
    pub r2_y: Option<f64>,
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub within_010: f64,
    pub within_020: f64,
    pub mean_spatial_error: f64,
}

impl MetricsSummary {
    pub fn is_degenerate(&self) -> bool {
        self.r2_overall.is_none() || self.r2_x.is_none() || self.r2_y.is_none()
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
struct Sum {
    total: f64,
    comp: f64,
}

impl Sum {
    fn add(&mut self, v: f64) {
        let t = self.total + v;
        if self.total.abs() >= v.abs() {
            self.comp += (self.total - t) + v;
        } else {
            self.comp += (v - t) + self.total;
        }
        self.total = t;
    }

    fn value(self) -> f64 {
        self.total + self.comp
    }
}

fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = Sum::default();
    values.into_iter().for_each(|v| s.add(v));
    s.value()
}

/// Euclidean error in normalized units.
pub fn spatial_error(r: &PredictionRecord) -> f64 {
    (r.truth.x - r.prediction.x).hypot(r.truth.y - r.prediction.y)
}

pub fn spatial_error_px(r: &PredictionRecord) -> f64 {
    spatial_error(r) * FRAME_PIXELS
}

/// Coefficient of determination about the truth mean.
pub fn r_squared(truths: &[f64], preds: &[f64]) -> Result<f64, MetricsError> {
    if truths.len() != preds.len() {
        return Err(MetricsError::LengthMismatch(truths.len(), preds.len()));
    }
    if truths.len() < 2 {
        return Err(MetricsError::InsufficientSamples(truths.len()));
    }
    let mean = sum(truths.iter().copied()) / truths.len() as f64;
    let ss_tot = sum(truths.iter().map(|t| (t - mean).powi(2)));
    let ss_res = sum(truths.iter().zip(preds).map(|(t, p)| (t - p).powi(2)));
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { Ok(1.0) } else { Err(MetricsError::DegenerateVariance) };
    }
    Ok(1.0 - ss_res / ss_tot)
}

fn summarize_group(group: &str, records: &[&PredictionRecord]) -> Result<MetricsSummary, MetricsError> {
    let n = records.len();
    if n < 2 {
        return Err(MetricsError::EmptyGroup { group: group.to_string(), n });
    }
    let tx: Vec<f64> = records.iter().map(|r| r.truth.x).collect();
    let ty: Vec<f64> = records.iter().map(|r| r.truth.y).collect();
    let px: Vec<f64> = records.iter().map(|r| r.prediction.x).collect();
    let py: Vec<f64> = records.iter().map(|r| r.prediction.y).collect();
    let pooled_t: Vec<f64> = tx.iter().chain(&ty).copied().collect();
    let pooled_p: Vec<f64> = px.iter().chain(&py).copied().collect();

    let residuals: Vec<f64> = pooled_t.iter().zip(&pooled_p).map(|(t, p)| t - p).collect();
    let m = residuals.len() as f64;
    let mse = sum(residuals.iter().map(|r| r * r)) / m;
    let mae = sum(residuals.iter().map(|r| r.abs())) / m;

    let errors: Vec<f64> = records.iter().map(|r| spatial_error(r)).collect();
    let within = |eps: f64| errors.iter().filter(|&&e| e <= eps).count() as f64 / n as f64;

    Ok(MetricsSummary {
        group: group.to_string(),
        n,
        r2_overall: r_squared(&pooled_t, &pooled_p).ok(),
        r2_x: r_squared(&tx, &px).ok(),
        r2_y: r_squared(&ty, &py).ok(),
        mse,
        rmse: mse.sqrt(),
        mae,
        within_010: within(WITHIN_TIGHT),
        within_020: within(WITHIN_LOOSE),
        mean_spatial_error: sum(errors.iter().copied()) / n as f64,
    })
}

/// One summary per group, ordered by group name.
pub fn summarize(records: &[PredictionRecord]) -> Result<Vec<MetricsSummary>, MetricsError> {
    let mut groups: BTreeMap<&str, Vec<&PredictionRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.group.as_str()).or_default().push(r);
    }
    groups.iter().map(|(g, rs)| summarize_group(g, rs)).collect()
}

/// One row of the normal-vs-fault comparison. Deltas are relative percentages;
/// `None` means undefined (zero or degenerate baseline).
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub baseline_group: String,
    pub fault: MetricsSummary,
    pub baseline_r2: Option<f64>,
    pub baseline_rmse: f64,
    pub delta_r2_pct: Option<f64>,
    pub delta_rmse_pct: Option<f64>,
}

fn relative_pct(baseline: f64, value: f64) -> Option<f64> {
    (baseline != 0.0).then(|| 100.0 * (value - baseline) / baseline)
}

pub fn compare(baseline: &MetricsSummary, fault: &MetricsSummary) -> ComparisonRow {
    let delta_r2_pct = match (baseline.r2_overall, fault.r2_overall) {
        (Some(b), Some(f)) => relative_pct(b, f),
        _ => None,
    };
    ComparisonRow {
        baseline_group: baseline.group.clone(),
        fault: fault.clone(),
        baseline_r2: baseline.r2_overall,
        baseline_rmse: baseline.rmse,
        delta_r2_pct,
        delta_rmse_pct: relative_pct(baseline.rmse, fault.rmse),
    }
}
