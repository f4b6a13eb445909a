//! `inject`: every scenario applied to every clean frame, gated, written as
//! `out/<CATEGORY>_<scenario_id>/<image_id>.png` plus `out/manifest.jsonl`.
//!
//! Frames are streamed one at a time; scenarios fan out across the rayon pool.
//! Output is independent of thread count.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use faultforge::degrade::{io, ImageBuffer};
use faultforge::genai_client::{
    gate, BackendEndpoint, RemoteClient, ScoreRequest, Scorer, StubScorer, Synthesizer, ENV_CLIP_URL, ENV_LDM_URL,
};
use faultforge::scenario::{parse_scenario_file, FaultScenario, ScenarioFormat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BackendMode, PipelineConfig};
use crate::{CliError, Context};

pub const MANIFEST: &str = "manifest.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Rejected,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestLine {
    pub image_id: String,
    pub scenario_id: String,
    pub category: String,
    pub strength: f64,
    pub seed: u64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    /// Path relative to the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Folder name for one scenario, e.g. `FOG_SLIGHT_0001_015`.
pub fn folder_name(s: &FaultScenario) -> String {
    format!("{}_{}", s.category, s.scenario_id)
}

/// Sorted `*.png` files directly inside `dir`, keyed by file stem.
pub fn list_pngs(dir: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).ctx(format!("cannot list {}", dir.display()))? {
        let path = entry.ctx(format!("cannot list {}", dir.display()))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) && path.is_file() {
            let stem = path.file_stem().and_then(|s| s.to_str()).map(str::to_string);
            if let Some(stem) = stem {
                out.push((stem, path));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn backends(cfg: &PipelineConfig) -> Result<(Synthesizer, bool), CliError> {
    match cfg.backend_mode {
        BackendMode::Stub => Ok((Synthesizer::LocalStub, false)),
        BackendMode::Remote => {
            let ep = BackendEndpoint::from_env(ENV_LDM_URL, Duration::from_millis(cfg.timeout_ms), cfg.max_retries)
                .ctx("remote synthesis backend")?;
            Ok((Synthesizer::Remote(RemoteClient::new(ep).ctx("remote synthesis backend")?), true))
        }
    }
}

fn remote_scorer(cfg: &PipelineConfig) -> Result<Arc<Scorer>, CliError> {
    let ep = BackendEndpoint::from_env(ENV_CLIP_URL, Duration::from_millis(cfg.timeout_ms), cfg.max_retries)
        .ctx("remote fidelity scorer")?;
    Ok(Arc::new(Scorer::Remote(RemoteClient::new(ep).ctx("remote fidelity scorer")?)))
}

fn failed(image_id: &str, s: &FaultScenario, error: String) -> ManifestLine {
    ManifestLine {
        image_id: image_id.to_string(),
        scenario_id: s.scenario_id.clone(),
        category: s.category.to_string(),
        strength: s.strength,
        seed: s.seed,
        status: Status::Failed,
        score: None,
        output: None,
        error: Some(error),
    }
}

fn process(
    image_id: &str,
    base: &ImageBuffer,
    s: &FaultScenario,
    synth: &Synthesizer,
    scorer: &Scorer,
    threshold: f64,
    out_dir: &Path,
) -> ManifestLine {
    let result = (|| -> Result<ManifestLine, String> {
        let img = synth.synth_image(base, s).map_err(|e| e.to_string())?;
        let req = ScoreRequest { image_id, image: &img, description: &s.description, strength: s.strength };
        let score = scorer.score_fidelity(&req).map_err(|e| e.to_string())?;
        let (accepted, _) = gate(&[(s.scenario_id.clone(), score)], threshold);
        let mut line = ManifestLine {
            image_id: image_id.to_string(),
            scenario_id: s.scenario_id.clone(),
            category: s.category.to_string(),
            strength: s.strength,
            seed: s.seed,
            status: Status::Rejected,
            score: Some(score),
            output: None,
            error: None,
        };
        if !accepted.is_empty() {
            let rel = format!("{}/{image_id}.png", folder_name(s));
            let dir = out_dir.join(folder_name(s));
            std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            io::write_png(&img, &out_dir.join(&rel)).map_err(|e| e.to_string())?;
            line.status = Status::Ok;
            line.output = Some(rel);
        }
        Ok(line)
    })();
    result.unwrap_or_else(|e| failed(image_id, s, e))
}

pub fn run(cfg: &PipelineConfig, images: &Path, scenarios: &Path, out: &Path) -> Result<(), CliError> {
    if !images.is_dir() {
        return Err(CliError::Data(format!("input directory {} does not exist", images.display())));
    }
    let bytes = std::fs::read(scenarios).ctx(format!("cannot read {}", scenarios.display()))?;
    let format = if scenarios.extension().is_some_and(|e| e == "txt") { ScenarioFormat::PipeText } else { ScenarioFormat::Jsonl };
    let scenarios = parse_scenario_file(&bytes, format).ctx(format!("invalid scenario file {}", scenarios.display()))?;
    let inputs = list_pngs(images)?;
    if inputs.is_empty() {
        return Err(CliError::Data(format!("no PNG images in {}", images.display())));
    }
    std::fs::create_dir_all(out).ctx(format!("cannot create {}", out.display()))?;
    let (synth, remote) = backends(cfg)?;
    let shared_scorer = if remote { Some(remote_scorer(cfg)?) } else { None };

    let mut manifest = String::new();
    let mut failures = 0usize;
    for (image_id, path) in &inputs {
        let lines: Vec<ManifestLine> = match io::read_png(path) {
            Ok(base) => {
                let scorer = match &shared_scorer {
                    Some(s) => s.clone(),
                    None => {
                        let mut stub = StubScorer::default();
                        stub.register(image_id.clone(), base.clone());
                        Arc::new(Scorer::LocalStub(stub))
                    }
                };
                scenarios
                    .par_iter()
                    .map(|s| process(image_id, &base, s, &synth, &scorer, cfg.gate_threshold, out))
                    .collect()
            }
            Err(e) => scenarios.iter().map(|s| failed(image_id, s, e.to_string())).collect(),
        };
        for line in lines {
            failures += (line.status == Status::Failed) as usize;
            manifest.push_str(&serde_json::to_string(&line).expect("manifest line serializes"));
            manifest.push('\n');
        }
    }
    let manifest_path = out.join(MANIFEST);
    std::fs::write(&manifest_path, manifest).ctx(format!("cannot write {}", manifest_path.display()))?;
    let total = inputs.len() * scenarios.len();
    if failures > 0 {
        return Err(CliError::Partial(format!("{failures} of {total} injections failed (see {})", manifest_path.display())));
    }
    println!("wrote {total} manifest entries to {}", manifest_path.display());
    Ok(())
}
