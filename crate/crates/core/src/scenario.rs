//! Fault scenarios: the category registry, scenario files, and a local
//! deterministic scenario generator.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

/// Inverse golden ratio used for the low-discrepancy strength sequence.
pub const PHI_INV: f64 = 0.618_033_988_7;

macro_rules! categories {
    ($($variant:ident => $name:literal, $phrase:literal;)*) => {
        /// One entry of the fault taxonomy.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        #[repr(u16)]
        pub enum FaultCategory {
            $($variant,)*
        }

        impl FaultCategory {
            /// Every category, ordered by id.
            pub const ALL: &'static [FaultCategory] = &[$(FaultCategory::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(FaultCategory::$variant => $name,)*
                }
            }

            fn phrase(self) -> &'static str {
                match self {
                    $(FaultCategory::$variant => $phrase,)*
                }
            }
        }
    };
}

categories! {
    Fog => "FOG", "fog drifting across the road";
    DustStorm => "DUST_STORM", "dust storm haze tinting the scene";
    FrostCoating => "FROST_COATING", "frost coating the lens cover";
    Rain => "RAIN", "rain streaks running over the lens";
    LensDistortion => "LENS_DISTORTION", "lens distortion with color fringing";
    BarrelDistortion => "BARREL_DISTORTION", "barrel distortion bending straight lines";
    FishEye => "FISH_EYE", "fish-eye warping of the field of view";
    LensVignetting => "LENS_VIGNETTING", "vignetting darkening the frame corners";
    ChromaticAberration => "CHROMATIC_ABERRATION", "chromatic aberration splitting color channels";
    DeadPixels => "DEAD_PIXELS", "dead pixels scattered across the sensor";
    CameraFailure => "CAMERA_FAILURE", "intermittent camera failure dropping image rows";
    CameraBanding => "CAMERA_BANDING", "horizontal banding from sensor readout";
    SensorHeat => "SENSOR_HEAT", "thermal noise from a hot sensor";
    HwOverheat => "HW_OVERHEAT", "hardware overheating freezing part of the frame";
    MotionBlur => "MOTION_BLUR", "motion blur from fast lateral movement";
    CameraShake => "CAMERA_SHAKE", "camera shake from a loose mount";
    CameraYaw => "CAMERA_YAW", "camera yaw misalignment skewing the view";
    PerspectiveDistortion => "PERSPECTIVE_DISTORTION", "perspective distortion from a tilted mount";
    GlareOcclusion => "GLARE_OCCLUSION", "glare and debris partially occluding the view";
    LowLightTunnel => "LOW_LIGHT_TUNNEL", "low light inside a tunnel";
    BrightReflection => "BRIGHT_REFLECTION", "bright reflection off the road surface";
    ColorShiftNight => "COLOR_SHIFT_NIGHT", "night-time color shift toward blue";
}

impl FaultCategory {
    pub fn id(self) -> u16 {
        self as u16
    }

    pub fn from_id(id: u16) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }

    /// Comma-separated list of all names, for diagnostics.
    pub fn valid_names() -> String {
        Self::ALL.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for FaultCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown fault category `{0}`")]
pub struct UnknownCategory(pub String);

impl FromStr for FaultCategory {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_name(s.trim()).ok_or_else(|| UnknownCategory(s.trim().to_string()))
    }
}

impl Serialize for FaultCategory {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for FaultCategory {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        Self::from_name(&name).ok_or_else(|| serde::de::Error::custom(UnknownCategory(name)))
    }
}

/// Coarse label for a strength value, used in descriptions and ids.
pub fn strength_band(strength: f64) -> &'static str {
    match strength {
        s if s < 0.25 => "SLIGHT",
        s if s < 0.5 => "MODERATE",
        s if s < 0.75 => "HEAVY",
        _ => "SEVERE",
    }
}

/// Strength expressed as a three-digit percentage token, e.g. `0.15` -> `015`.
pub fn strength_token(strength: f64) -> String {
    format!("{:03}", (strength * 100.0 + 1e-9).floor() as u32)
}

/// Builds the conventional scenario id `<BAND>_<ordinal>_<strength%>`.
pub fn scenario_id_for(ordinal: usize, strength: f64) -> String {
    format!("{}_{:04}_{}", strength_band(strength), ordinal, strength_token(strength))
}

/// One structured fault description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultScenario {
    // Field order is the canonical (sorted) key order of the JSONL format.
    pub category: FaultCategory,
    pub description: String,
    pub scenario_id: String,
    pub seed: u64,
    pub strength: f64,
}

impl FaultScenario {
    pub fn new(
        scenario_id: impl Into<String>,
        category: FaultCategory,
        strength: f64,
        description: impl Into<String>,
        seed: u64,
    ) -> Result<Self, ScenarioError> {
        let scenario = Self {
            category,
            description: description.into(),
            scenario_id: scenario_id.into(),
            seed,
            strength,
        };
        scenario.validate().map_err(ScenarioError::Invalid)?;
        Ok(scenario)
    }

    /// Checks the field invariants, returning a description of the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.strength) {
            return Err(format!("strength {} outside [0, 1]", self.strength));
        }
        if self.scenario_id.trim().is_empty() {
            return Err("empty scenario_id".into());
        }
        if self.description.trim().is_empty() {
            return Err("empty description".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioFormat {
    /// One JSON object per line (canonical).
    Jsonl,
    /// `NAME | strength | description | seed` per line, `#` comments allowed.
    PipeText,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("scenario file is not valid UTF-8: {0}")]
    Decode(String),
    #[error("line {line_no}: {message}")]
    Schema { line_no: usize, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("refusing to write an empty scenario list")]
    EmptyBatch,
}

fn schema(line_no: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema { line_no, message: message.into() }
}

/// Parses a scenario file. Line numbers in errors are 1-based.
pub fn parse_scenario_file(
    bytes: &[u8],
    format: ScenarioFormat,
) -> Result<Vec<FaultScenario>, ScenarioError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ScenarioError::Decode(e.to_string()))?;
    let mut scenarios = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let scenario = match format {
            ScenarioFormat::Jsonl => parse_json_line(line, line_no)?,
            ScenarioFormat::PipeText => {
                if line.starts_with('#') {
                    continue;
                }
                parse_pipe_line(line, line_no, scenarios.len())?
            }
        };
        scenario.validate().map_err(|m| schema(line_no, m))?;
        if !seen.insert(scenario.scenario_id.clone()) {
            return Err(schema(
                line_no,
                format!("duplicate scenario_id `{}`", scenario.scenario_id),
            ));
        }
        scenarios.push(scenario);
    }
    Ok(scenarios)
}

fn parse_json_line(line: &str, line_no: usize) -> Result<FaultScenario, ScenarioError> {
    serde_json::from_str(line).map_err(|e| schema(line_no, e.to_string()))
}

fn parse_pipe_line(
    line: &str,
    line_no: usize,
    ordinal: usize,
) -> Result<FaultScenario, ScenarioError> {
    let fields: Vec<&str> = line.split('|').map(str::trim).collect();
    if fields.len() < 4 {
        return Err(schema(
            line_no,
            format!("expected `NAME | strength | description | seed`, got {} field(s)", fields.len()),
        ));
    }
    let category = FaultCategory::from_name(fields[0]).ok_or_else(|| {
        schema(line_no, format!("unknown category `{}`", fields[0]))
    })?;
    let strength: f64 = fields[1]
        .parse()
        .map_err(|_| schema(line_no, format!("bad strength `{}`", fields[1])))?;
    let last = fields.len() - 1;
    let seed: u64 = fields[last]
        .parse()
        .map_err(|_| schema(line_no, format!("bad seed `{}`", fields[last])))?;
    // Descriptions may themselves contain pipes.
    let description = fields[2..last].join(" | ");
    if !(0.0..=1.0).contains(&strength) {
        return Err(schema(line_no, format!("strength {strength} outside [0, 1]")));
    }
    Ok(FaultScenario {
        category,
        description,
        scenario_id: scenario_id_for(ordinal, strength),
        seed,
        strength,
    })
}

/// Canonical JSONL encoding, one object per line, LF terminated.
pub fn write_scenario_file(scenarios: &[FaultScenario]) -> Result<Vec<u8>, ScenarioError> {
    if scenarios.is_empty() {
        return Err(ScenarioError::EmptyBatch);
    }
    let mut out = Vec::new();
    for s in scenarios {
        s.validate().map_err(ScenarioError::Invalid)?;
        serde_json::to_writer(&mut out, s).expect("scenario serialization is infallible");
        out.push(b'\n');
    }
    Ok(out)
}

/// The k-th (0-based) term of the golden-ratio strength sequence.
pub fn golden_strength(k: u64) -> f64 {
    ((k + 1) as f64 * PHI_INV).fract()
}

/// Deterministically generates `count` scenarios for one category.
///
/// Stand-in for the LLM scenario generator: strengths follow a
/// low-discrepancy sequence so any prefix covers `[0, 1)` evenly.
///
/// # Panics
///
/// Panics if `count` is zero.
pub fn generate_scenarios(category: FaultCategory, count: usize, master_seed: u64) -> Vec<FaultScenario> {
    assert!(count >= 1, "count must be positive");
    (0..count)
        .map(|k| {
            let strength = golden_strength(k as u64);
            let band = strength_band(strength);
            let mut adjective = band.to_ascii_lowercase();
            adjective[..1].make_ascii_uppercase();
            FaultScenario {
                category,
                description: format!(
                    "{adjective} {} degrading the forward camera (strength {strength:.3})",
                    category.phrase()
                ),
                scenario_id: scenario_id_for(k, strength),
                seed: rng::split(master_seed, k as u64),
                strength,
            }
        })
        .collect()
}
