use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use faultforge::degrade::io;
use faultforge::faultlut::{self, FaultLookupTable, LutInput, RiskThresholds};
use faultforge::genai_client::{BackendEndpoint, RemoteClient, ENV_LLM_URL};
use faultforge::metrics::report::{comparison_table, metrics_csv, read_metrics_csv};
use faultforge::metrics::{compare, summarize};
use faultforge::perception::{self, estimate_lane_center, LanePoint, PredictionRecord};
use faultforge::scenario::{generate_scenarios, write_scenario_file, FaultCategory};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BackendMode, PipelineConfig};
use crate::inject::{list_pngs, ManifestLine, Status, MANIFEST};
use crate::{CliError, Context};

pub const TRUTH_FILE: &str = "truth.jsonl";

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).ctx(format!("cannot create {}", parent.display()))?;
    }
    std::fs::write(path, bytes).ctx(format!("cannot write {}", path.display()))
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).ctx(format!("cannot read {}", path.display()))
}

pub fn scenarios(cfg: &PipelineConfig, category: FaultCategory, count: usize, out: &Path) -> Result<(), CliError> {
    let list = match cfg.backend_mode {
        BackendMode::Stub => generate_scenarios(category, count, cfg.master_seed),
        BackendMode::Remote => {
            let ep = BackendEndpoint::from_env(ENV_LLM_URL, Duration::from_millis(cfg.timeout_ms), cfg.max_retries)
                .ctx("remote scenario backend")?;
            RemoteClient::new(ep)
                .ctx("remote scenario backend")?
                .generate_scenarios(category, count, cfg.master_seed)
                .ctx("remote scenario backend")?
        }
    };
    write(out, write_scenario_file(&list).ctx("scenario list")?)?;
    println!("wrote {} scenarios to {}", list.len(), out.display());
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthLine {
    image_id: String,
    gt_x: f64,
    gt_y: f64,
}

pub fn fixtures(count: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).ctx(format!("cannot create {}", out.display()))?;
    let mut truth = String::new();
    for (i, (img, gt)) in perception::gen_synthetic_track(count, seed).iter().enumerate() {
        let id = format!("track_{i:05}");
        io::write_png(img, &out.join(format!("{id}.png"))).ctx(&id)?;
        let line = TruthLine { image_id: id, gt_x: gt.x, gt_y: gt.y };
        truth.push_str(&serde_json::to_string(&line).expect("truth line serializes"));
        truth.push('\n');
    }
    write(&out.join(TRUTH_FILE), truth)?;
    println!("wrote {count} fixtures to {}", out.display());
    Ok(())
}

fn read_truth(path: &Path) -> Result<HashMap<String, LanePoint>, CliError> {
    let text = String::from_utf8(read(path)?).ctx(format!("{} is not UTF-8", path.display()))?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let t: TruthLine = serde_json::from_str(line).ctx(format!("{} line {}", path.display(), i + 1))?;
        let p = LanePoint::new(t.gt_x, t.gt_y).ctx(format!("{} line {}", path.display(), i + 1))?;
        map.insert(t.image_id, p);
    }
    Ok(map)
}

pub fn predict(
    images: Option<&Path>,
    faults: Option<&Path>,
    truth: &Path,
    baseline_group: &str,
    out: &Path,
) -> Result<(), CliError> {
    let truth = read_truth(truth)?;
    // (image_id, group, path)
    let mut jobs = Vec::new();
    if let Some(dir) = images {
        for (id, path) in list_pngs(dir)? {
            jobs.push((id, baseline_group.to_string(), path));
        }
    }
    if let Some(dir) = faults {
        let manifest = dir.join(MANIFEST);
        let text = String::from_utf8(read(&manifest)?).ctx(format!("{} is not UTF-8", manifest.display()))?;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let m: ManifestLine = serde_json::from_str(line).ctx(format!("{} line {}", manifest.display(), i + 1))?;
            if let (Status::Ok, Some(rel)) = (m.status, m.output) {
                let group = rel.split('/').next().unwrap_or_default().to_string();
                jobs.push((m.image_id, group, dir.join(rel)));
            }
        }
    }
    let records: Vec<PredictionRecord> = jobs
        .par_iter()
        .map(|(id, group, path)| {
            let gt = *truth.get(id).ok_or_else(|| CliError::Data(format!("no ground truth for `{id}`")))?;
            let img = io::read_png(path).ctx(path.display())?;
            let pred = estimate_lane_center(&img).ctx(path.display())?;
            Ok(PredictionRecord { image_id: id.clone(), group: group.clone(), truth: gt, prediction: pred })
        })
        .collect::<Result<_, CliError>>()?;
    write(out, perception::write_predictions(&records))?;
    println!("wrote {} predictions to {}", records.len(), out.display());
    Ok(())
}

pub fn evaluate(predictions: &Path, baseline_group: &str, out: &Path) -> Result<(), CliError> {
    let records = perception::read_predictions(&read(predictions)?).ctx(predictions.display())?;
    let summaries = summarize(&records).ctx("cannot summarize predictions")?;
    let baseline = summaries
        .iter()
        .find(|s| s.group == baseline_group)
        .ok_or_else(|| CliError::Data(format!("baseline group `{baseline_group}` not found in {}", predictions.display())))?;
    write(&out.join("metrics.csv"), metrics_csv(&summaries))?;
    let rows: Vec<_> = summaries.iter().filter(|s| s.group != baseline_group).map(|s| compare(baseline, s)).collect();
    let table = comparison_table(baseline, &rows);
    write(&out.join("comparison.txt"), &table)?;
    for s in summaries.iter().filter(|s| s.r2_overall.is_none()) {
        eprintln!("note: group `{}` has zero truth variance; its R² cell is left empty", s.group);
    }
    print!("{table}");
    Ok(())
}

/// Category is the longest registry name prefixing the group; strength is the
/// last three-digit `_` token divided by 100 (`FOG_SLIGHT_0001_015` -> FOG, 0.15).
pub fn parse_group(group: &str) -> Option<(FaultCategory, f64)> {
    let category = FaultCategory::ALL
        .iter()
        .copied()
        .filter(|c| group == c.name() || group.starts_with(&format!("{}_", c.name())))
        .max_by_key(|c| c.name().len())?;
    let token = group[category.name().len()..]
        .split('_')
        .rev()
        .find(|t| t.len() == 3 && t.bytes().all(|b| b.is_ascii_digit()))?;
    let strength = token.parse::<u32>().ok()? as f64 / 100.0;
    (strength <= 1.0).then_some((category, strength))
}

pub fn build_lut(
    metrics: &Path,
    out: &Path,
    bucket_count: u8,
    baseline_group: &str,
    csv: Option<&Path>,
) -> Result<(), CliError> {
    let summaries = read_metrics_csv(&read(metrics)?).ctx(metrics.display())?;
    let mut inputs = Vec::new();
    for s in summaries {
        if s.group == baseline_group {
            continue;
        }
        match parse_group(&s.group) {
            Some((category, strength)) => inputs.push(LutInput { category, strength, summary: s }),
            None => eprintln!("warning: skipping group `{}` (no category/strength in its name)", s.group),
        }
    }
    let table = faultlut::build(&inputs, bucket_count, &RiskThresholds::default()).ctx("cannot build table")?;
    write(out, table.serialize())?;
    if let Some(csv) = csv {
        write(csv, table.to_csv())?;
    }
    println!("wrote {} entries ({} bytes) to {}", table.entries().len(), table.byte_len(), out.display());
    Ok(())
}

fn load_table(path: &Path) -> Result<FaultLookupTable, CliError> {
    FaultLookupTable::deserialize(&read(path)?).ctx(path.display())
}

pub fn query(lut: &Path, category: FaultCategory, strength: f64) -> Result<(), CliError> {
    let table = load_table(lut)?;
    let e = table
        .query(category, strength)
        .map_err(|e| CliError::NotCovered(format!("{category} at strength {strength}: {e}")))?;
    println!(
        "category={category} bucket={} n={} r2={} rmse={} mae={} within_010={} within_020={} risk={}",
        e.key.bucket, e.n, e.r2, e.rmse, e.mae, e.within_010, e.within_020, e.risk
    );
    Ok(())
}

pub fn bench(lut: &Path, iters: usize) -> Result<(), CliError> {
    let table = load_table(lut)?;
    println!("{}", faultlut::bench_query(&table, iters));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_names() {
        assert_eq!(parse_group("FOG_SLIGHT_0001_015"), Some((FaultCategory::Fog, 0.15)));
        assert_eq!(parse_group("FOG_015"), Some((FaultCategory::Fog, 0.15)));
        assert_eq!(parse_group("NORMAL"), None);
        assert_eq!(parse_group("FOG_SLIGHT"), None);
        assert_eq!(parse_group("FOGGY_015"), None);
        assert_eq!(parse_group("FOG_SEVERE_0002_100"), Some((FaultCategory::Fog, 1.0)));
    }

    #[test]
    fn longest_prefix_wins() {
        for &c in FaultCategory::ALL {
            assert_eq!(parse_group(&format!("{c}_HEAVY_0003_070")), Some((c, 0.70)));
        }
    }
}
