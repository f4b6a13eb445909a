//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::alloc::{GlobalAlloc, Layout, System};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use faultforge::degrade::{apply_fault, degradation_magnitude, io, DegradationSpec, ImageBuffer};
use faultforge::faultlut::{
    bench_queries, build, report_from, time_queries, FaultLookupTable, LutEntry, LutError, LutInput, LutKey, Risk,
    RiskThresholds,
};
use faultforge::genai_client::gate;
use faultforge::metrics::{compare, spatial_error, spatial_error_px, summarize, MetricsSummary};
use faultforge::perception::{gen_synthetic_track, LanePoint, PredictionRecord};
use faultforge::rng::{split, CounterRng};
use faultforge::scenario::{scenario_id_for, write_scenario_file, FaultCategory, FaultScenario};
use rayon::prelude::*;

struct Counting;

static ALLOCATIONS: AtomicU64 = AtomicU64::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        ALLOCATIONS.fetch_add(1, Ordering::Relaxed);
        System.alloc(layout)
    }
    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout)
    }
    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        ALLOCATIONS.fetch_add(1, Ordering::Relaxed);
        System.realloc(ptr, layout, new_size)
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- oracle

fn naive_r2(t: &[f64], p: &[f64]) -> Option<f64> {
    let mean = t.iter().sum::<f64>() / t.len() as f64;
    let tot: f64 = t.iter().map(|v| (v - mean) * (v - mean)).sum();
    let res: f64 = t.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
    if tot == 0.0 {
        return (res == 0.0).then_some(1.0);
    }
    Some(1.0 - res / tot)
}

fn naive_summary(rs: &[PredictionRecord]) -> MetricsSummary {
    let n = rs.len();
    let (mut se, mut ae, mut dist, mut w1, mut w2) = (0.0, 0.0, 0.0, 0usize, 0usize);
    let (mut tx, mut ty, mut px, mut py) = (vec![], vec![], vec![], vec![]);
    for r in rs {
        let (dx, dy) = (r.truth.x - r.prediction.x, r.truth.y - r.prediction.y);
        se += dx * dx + dy * dy;
        ae += dx.abs() + dy.abs();
        let d = (dx * dx + dy * dy).sqrt();
        dist += d;
        w1 += (d <= 0.10) as usize;
        w2 += (d <= 0.20) as usize;
        tx.push(r.truth.x);
        ty.push(r.truth.y);
        px.push(r.prediction.x);
        py.push(r.prediction.y);
    }
    let all_t: Vec<f64> = tx.iter().chain(&ty).copied().collect();
    let all_p: Vec<f64> = px.iter().chain(&py).copied().collect();
    let mse = se / (2 * n) as f64;
    MetricsSummary {
        group: rs[0].group.clone(),
        n,
        r2_overall: naive_r2(&all_t, &all_p),
        r2_x: naive_r2(&tx, &px),
        r2_y: naive_r2(&ty, &py),
        mse,
        rmse: mse.sqrt(),
        mae: ae / (2 * n) as f64,
        within_010: w1 as f64 / n as f64,
        within_020: w2 as f64 / n as f64,
        mean_spatial_error: dist / n as f64,
    }
}

fn ac1_metric_oracle() -> Outcome {
    let start = Instant::now();
    let rng = CounterRng::new(1);
    let mut records = Vec::new();
    let mut idx = 0u64;
    let mut next = || {
        idx += 1;
        rng.uniform(0, idx)
    };
    for g in 0..100 {
        let n = 2 + (next() * 63.0) as usize;
        for i in 0..n {
            let truth = LanePoint { x: next(), y: next() };
            // a tenth of groups predict perfectly, exercising the zero-residual path
            let prediction = if g % 10 == 0 { truth } else { LanePoint { x: next(), y: next() } };
            records.push(PredictionRecord { image_id: i.to_string(), group: format!("G{g:03}"), truth, prediction });
        }
    }
    let got = summarize(&records).map_err(|e| e.to_string())?;
    let mut by_group: BTreeMap<&str, Vec<PredictionRecord>> = BTreeMap::new();
    for r in &records {
        by_group.entry(r.group.as_str()).or_default().push(r.clone());
    }
    check(got.len() == 100, || format!("{} groups", got.len()))?;
    let mut worst = 0.0f64;
    for (s, (_, rs)) in got.iter().zip(&by_group) {
        let want = naive_summary(rs);
        check(s.n == want.n && s.n <= 64, || format!("{}: n", s.group))?;
        for (a, b) in [(s.r2_overall, want.r2_overall), (s.r2_x, want.r2_x), (s.r2_y, want.r2_y)] {
            match (a, b) {
                (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
                (None, None) => {}
                _ => return Err(format!("{}: degenerate flag differs", s.group)),
            }
        }
        for (a, b) in [
            (s.mse, want.mse),
            (s.rmse, want.rmse),
            (s.mae, want.mae),
            (s.within_010, want.within_010),
            (s.within_020, want.within_020),
            (s.mean_spatial_error, want.mean_spatial_error),
        ] {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    check(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    check(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("max deviation {worst:.1e}, {elapsed:.2?}"))
}

fn summary(group: &str, r2: f64, rmse: f64, within_010: f64) -> MetricsSummary {
    MetricsSummary {
        group: group.into(),
        n: 100,
        r2_overall: Some(r2),
        r2_x: Some(r2),
        r2_y: Some(r2),
        mse: rmse * rmse,
        rmse,
        mae: rmse,
        within_010,
        within_020: within_010,
        mean_spatial_error: rmse,
    }
}

fn ac2_table_deltas() -> Outcome {
    let row = compare(&summary("NORMAL", 0.85, 0.105, 0.9), &summary("FOG", 0.755, 0.209, 0.31));
    let drmse = row.delta_rmse_pct.ok_or("undefined dRMSE")?;
    let dr2 = row.delta_r2_pct.ok_or("undefined dR2")?;
    check((drmse - 99.0).abs() <= 0.5, || format!("dRMSE {drmse}"))?;
    check((dr2 + 11.2).abs() <= 0.5, || format!("dR2 {dr2}"))?;
    Ok(format!("dRMSE {drmse:+.2}%, dR2 {dr2:+.2}%"))
}

fn ac3_risk_anchors() -> Outcome {
    let th = RiskThresholds::default();
    let worst = th.classify(0.310, 0.755, 0.209);
    let best = th.classify(0.445, 0.835, 0.181);
    check(worst == Risk::Critical, || format!("worst row -> {worst}"))?;
    check(best == Risk::Degraded, || format!("best row -> {best}"))?;
    // the same rows pushed through the table builder
    let t = build(
        &[
            LutInput { category: FaultCategory::Fog, strength: 0.15, summary: summary("a", 0.755, 0.209, 0.310) },
            LutInput { category: FaultCategory::Rain, strength: 0.15, summary: summary("b", 0.835, 0.181, 0.445) },
        ],
        10,
        &th,
    )
    .map_err(|e| e.to_string())?;
    let fog = t.query(FaultCategory::Fog, 0.15).map_err(|e| e.to_string())?.risk;
    let rain = t.query(FaultCategory::Rain, 0.15).map_err(|e| e.to_string())?.risk;
    check(fog == Risk::Critical && rain == Risk::Degraded, || format!("built: {fog}, {rain}"))?;
    Ok("worst fault row critical, best fault row degraded".into())
}

/// 16 lane-track frames plus 16 textured frames.
fn probe_set() -> Vec<ImageBuffer> {
    let mut v: Vec<ImageBuffer> = gen_synthetic_track(16, 404).into_iter().map(|(img, _)| img).collect();
    for k in 0..16u32 {
        let rng = CounterRng::new(k as u64);
        v.push(ImageBuffer::from_fn(224, 224, |x, y| {
            let n = (rng.uniform(0, (y * 224 + x) as u64) * 40.0) as u32;
            [
                ((x * (k + 1) + n) % 256) as u8,
                ((y * 3 + k * 17 + n) % 256) as u8,
                (((x ^ y) + k * 9) % 256) as u8,
            ]
        }));
    }
    v
}

fn degrade_all(probes: &[ImageBuffer], strength: f64) -> Vec<Vec<u8>> {
    FaultCategory::ALL
        .par_iter()
        .flat_map_iter(|&c| {
            probes.iter().enumerate().map(move |(i, img)| {
                let spec = DegradationSpec::new(c, strength, split(c.id() as u64, i as u64)).unwrap();
                apply_fault(img, &spec).unwrap().into_pixels()
            })
        })
        .collect()
}

fn ac4_identity_determinism(probes: &[ImageBuffer]) -> Outcome {
    let start = Instant::now();
    for &c in FaultCategory::ALL {
        for (i, img) in probes.iter().enumerate() {
            let out = apply_fault(img, &DegradationSpec::new(c, 0.0, i as u64).unwrap()).unwrap();
            check(&out == img, || format!("{c} strength 0 changed probe {i}"))?;
        }
    }
    let mut runs = Vec::new();
    for threads in [1, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        runs.push(pool.install(|| degrade_all(probes, 0.65)));
        runs.push(pool.install(|| degrade_all(probes, 0.65)));
    }
    check(runs.windows(2).all(|w| w[0] == w[1]), || "outputs differ across runs/thread counts".into())?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("22 categories x {} probes, 1/4/8 threads, {elapsed:.2?}", probes.len()))
}

fn ac5_monotonicity(probes: &[ImageBuffer]) -> Outcome {
    let strengths = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut smallest_step = f64::INFINITY;
    for &c in FaultCategory::ALL {
        let means: Vec<f64> = strengths
            .iter()
            .map(|&s| {
                probes
                    .par_iter()
                    .enumerate()
                    .map(|(i, img)| {
                        let out = apply_fault(img, &DegradationSpec::new(c, s, split(c.id() as u64, i as u64)).unwrap()).unwrap();
                        degradation_magnitude(img, &out).unwrap()
                    })
                    .sum::<f64>()
                    / probes.len() as f64
            })
            .collect();
        for w in means.windows(2) {
            check(w[1] >= w[0], || format!("{c}: {means:?}"))?;
            smallest_step = smallest_step.min(w[1] - w[0]);
        }
    }
    Ok(format!("all 22 categories non-decreasing (smallest step {smallest_step:.2e})"))
}

// ---------------------------------------------------------------- CLI helpers

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_faultforge"))
}

fn run(args: &[&str], dir: &Path) -> (i32, String) {
    let out = bin().args(args).current_dir(dir).output().expect("spawn faultforge");
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn run_ok(args: &[&str], dir: &Path) -> Result<String, String> {
    match run(args, dir) {
        (0, text) => Ok(text),
        (code, text) => Err(format!("`{}` exited {code}: {text}", args.join(" "))),
    }
}

fn fog_scenarios(strengths: &[f64]) -> Vec<u8> {
    let list: Vec<FaultScenario> = strengths
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            FaultScenario::new(scenario_id_for(k, s), FaultCategory::Fog, s, format!("fog at strength {s}"), 1000 + k as u64)
                .unwrap()
        })
        .collect();
    write_scenario_file(&list).unwrap()
}

fn ac6_fog_causality() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    std::fs::write(d.join("fog.jsonl"), fog_scenarios(&[0.0, 0.3, 0.6, 0.9])).map_err(|e| e.to_string())?;
    run_ok(&["fixtures", "--count", "200", "--seed", "2024", "--out", "in"], d)?;
    run_ok(&["inject", "--images", "in", "--scenarios", "fog.jsonl", "--out", "faults", "--gate-threshold", "-1"], d)?;
    run_ok(&["predict", "--faults", "faults", "--truth", "in/truth.jsonl", "--out", "p.jsonl"], d)?;
    let csv = std::fs::read(d.join("p.jsonl")).map_err(|e| e.to_string())?;
    let records = faultforge::perception::read_predictions(&csv).map_err(|e| e.to_string())?;
    let mut summaries = summarize(&records).map_err(|e| e.to_string())?;
    // folder names end in the strength token (..._030); order by it
    summaries.sort_by_key(|s| s.group.rsplit('_').next().unwrap_or_default().to_string());
    let rmse: Vec<f64> = summaries.iter().map(|s| s.rmse).collect();
    let w10: Vec<f64> = summaries.iter().map(|s| s.within_010).collect();
    check(summaries.len() == 4 && summaries.iter().all(|s| s.n == 200), || format!("groups {summaries:?}"))?;
    check(rmse.windows(2).all(|w| w[1] > w[0]), || format!("rmse not strictly increasing: {rmse:?}"))?;
    check(w10[0] - w10[3] >= 0.2, || format!("within-0.10 {w10:?}"))?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("rmse {:.6} < {:.6} < {:.6} < {:.6}; within-0.10 {:.2} -> {:.2}; {elapsed:.1?}", rmse[0], rmse[1], rmse[2], rmse[3], w10[0], w10[3]))
}

fn random_table(rng: &CounterRng, t: u64) -> FaultLookupTable {
    let buckets = 2 + (rng.u64_at(0, t) % 63) as u8;
    let count = (rng.u64_at(1, t) % 80) as usize;
    let mut keys: Vec<(u16, u8)> = (0..count as u64)
        .map(|i| ((rng.u64_at(2, t * 100 + i) % 22) as u16, (rng.u64_at(3, t * 100 + i) % buckets as u64) as u8))
        .collect();
    keys.sort();
    keys.dedup();
    let entries = keys
        .into_iter()
        .enumerate()
        .map(|(i, (category_id, bucket))| {
            let f = |s: u64| f32::from_bits(rng.u64_at(4 + s, t * 100 + i as u64) as u32);
            LutEntry {
                key: LutKey { category_id, bucket },
                n: rng.u64_at(9, t * 100 + i as u64) as u32,
                r2: f(0),
                rmse: f(1),
                mae: f(2),
                within_010: f(3),
                within_020: f(4),
                risk: Risk::from_u8((i % 3) as u8).unwrap(),
            }
        })
        .collect();
    FaultLookupTable::from_entries(buckets, entries).unwrap()
}

fn full_table() -> FaultLookupTable {
    let inputs: Vec<LutInput> = FaultCategory::ALL
        .iter()
        .flat_map(|&c| {
            (0..10).map(move |b| LutInput {
                category: c,
                strength: b as f64 / 10.0 + 0.05,
                summary: summary(&format!("{c}_{b}"), 0.9 - b as f64 * 0.02, 0.05 + b as f64 * 0.01, 0.9 - b as f64 * 0.05),
            })
        })
        .collect();
    build(&inputs, 10, &RiskThresholds::default()).unwrap()
}

fn ac7_lut_format() -> Outcome {
    let rng = CounterRng::new(77);
    let mut corruptions = 0u64;
    for t in 0..1000u64 {
        let table = random_table(&rng, t);
        let bytes = table.serialize();
        check(bytes.len() == 16 + 28 * table.entries().len(), || format!("table {t}: size {}", bytes.len()))?;
        let back = FaultLookupTable::deserialize(&bytes).map_err(|e| format!("table {t}: {e}"))?;
        check(back.serialize() == bytes && back.bucket_count() == table.bucket_count(), || format!("table {t} differs"))?;
        for pos in 0..bytes.len() {
            let mut bad = bytes.clone();
            bad[pos] ^= 1 + (rng.u64_at(20, t * 10_000 + pos as u64) % 255) as u8;
            corruptions += 1;
            match FaultLookupTable::deserialize(&bad) {
                Err(LutError::Checksum { .. }) => {}
                other => return Err(format!("table {t} byte {pos}: {other:?}")),
            }
        }
    }
    let empty = FaultLookupTable::from_entries(10, vec![]).unwrap().serialize().len();
    check(empty == 16, || format!("empty table {empty} bytes"))?;
    let full = full_table();
    check(full.entries().len() == 220, || format!("{} entries", full.entries().len()))?;
    let full_len = full.serialize().len();
    check(full_len == 16 + 220 * 28, || format!("full table {full_len} bytes"))?;
    Ok(format!("1000 round-trips exact, {corruptions} corruptions all ChecksumError, sizes 16 / {full_len}"))
}

fn ac8_latency() -> Outcome {
    let table = full_table();
    let iters = 1_000_000;
    let queries = bench_queries(iters, 99);
    let mut timings = vec![0u64; iters];
    // warm caches and the clock
    time_queries(&table, &queries[..10_000], &mut timings[..10_000]);
    let before = ALLOCATIONS.load(Ordering::SeqCst);
    time_queries(&table, &queries, &mut timings);
    let allocs = ALLOCATIONS.load(Ordering::SeqCst) - before;
    let report = report_from(&mut timings, table.byte_len());
    check(allocs == 0, || format!("{allocs} allocations during {iters} queries"))?;
    check(report.p99_ns < 1000, || format!("p99 {} ns", report.p99_ns))?;
    Ok(format!("{report}, allocations 0"))
}

fn ac9_gate_partition() -> Outcome {
    let rng = CounterRng::new(9);
    for t in 0..1000u64 {
        let len = (rng.u64_at(0, t) % 60) as usize;
        let scores: Vec<(String, f64)> = (0..len)
            .map(|i| (format!("s{i}"), rng.uniform_range(1, t * 100 + i as u64, -1.0, 1.0)))
            .collect();
        // every third threshold is an existing score, to hit equality
        let threshold = if t % 3 == 0 && len > 0 { scores[len / 2].1 } else { rng.uniform_range(2, t, -1.0, 1.0) };
        let (acc, rej) = gate(&scores, threshold);
        check(acc.len() + rej.len() == len, || format!("set {t}: sizes"))?;
        let want_acc: Vec<&String> = scores.iter().filter(|s| s.1 >= threshold).map(|s| &s.0).collect();
        let want_rej: Vec<&String> = scores.iter().filter(|s| s.1 < threshold).map(|s| &s.0).collect();
        check(acc.iter().map(|f| &f.scenario_id).collect::<Vec<_>>() == want_acc, || format!("set {t}: accepted"))?;
        check(rej.iter().map(|f| &f.scenario_id).collect::<Vec<_>>() == want_rej, || format!("set {t}: rejected"))?;
        check(acc.iter().chain(&rej).all(|f| f.accepted == (f.score >= f.threshold)), || format!("set {t}: flags"))?;
        let (all, none) = gate(&scores, -1.0);
        check(all.len() == len && none.is_empty(), || format!("set {t}: threshold -1"))?;
        let max = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let (none, all) = gate(&scores, max + 1e-9);
        check(none.is_empty() && all.len() == len, || format!("set {t}: threshold above max"))?;
    }
    Ok("1000 random score sets".into())
}

fn ac10_spatial_error() -> Outcome {
    let rec = |gt: (f64, f64), pred: (f64, f64)| PredictionRecord {
        image_id: "x".into(),
        group: "G".into(),
        truth: LanePoint { x: gt.0, y: gt.1 },
        prediction: LanePoint { x: pred.0, y: pred.1 },
    };
    let r = rec((0.0, 0.0), (0.3, 0.4));
    let (norm, px) = (spatial_error(&r), spatial_error_px(&r));
    check(norm == 0.5, || format!("normalized {norm:?}"))?;
    check(px == 112.0, || format!("pixels {px:?}"))?;
    let r = rec((0.5, 0.75), (0.5 + 52.154 / 224.0, 0.75));
    let shown = format!("{:.3}", spatial_error_px(&r));
    check(shown == "52.154", || format!("52.154 px rendered as {shown}"))?;
    Ok(format!("{norm} normalized / {px:.1} px; 52.154 px -> {shown}"))
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn ac11_cli_contract() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    let mut lines = Vec::new();

    // 0: scenarios, deterministic
    run_ok(&["scenarios", "--category", "FOG", "--count", "3", "--seed", "7", "--out", "s.jsonl"], d)?;
    run_ok(&["scenarios", "--category", "FOG", "--count", "3", "--seed", "7", "--out", "s2.jsonl"], d)?;
    check(std::fs::read(d.join("s.jsonl")).unwrap() == std::fs::read(d.join("s2.jsonl")).unwrap(), || {
        "scenario files differ".into()
    })?;
    let mut scen = String::from_utf8(std::fs::read(d.join("s.jsonl")).unwrap()).unwrap();
    scen.push_str(&String::from_utf8(fog_scenarios(&[0.0])).unwrap().replace("SLIGHT_0000_000", "SLIGHT_0099_000"));
    std::fs::write(d.join("s.jsonl"), scen).unwrap();
    run_ok(&["fixtures", "--count", "3", "--seed", "5", "--out", "in"], d)?;
    lines.push("exit 0 scenarios/fixtures");

    // idempotent inject, independent of thread count
    let inject = |out: &str, threads: &str| {
        bin()
            .args(["inject", "--images", "in", "--scenarios", "s.jsonl", "--out", out])
            .env("RAYON_NUM_THREADS", threads)
            .current_dir(d)
            .output()
            .map(|o| o.status.code())
    };
    check(inject("a", "1").map_err(|e| e.to_string())? == Some(0), || "inject a".into())?;
    check(inject("a", "8").map_err(|e| e.to_string())? == Some(0), || "inject a rerun".into())?;
    check(inject("b", "4").map_err(|e| e.to_string())? == Some(0), || "inject b".into())?;
    let (ta, tb) = (tree(&d.join("a")), tree(&d.join("b")));
    check(ta == tb, || "inject trees differ".into())?;
    check(ta.len() == 3 * 4 + 1, || format!("{} files in fault tree", ta.len()))?;
    let manifest = String::from_utf8(ta[Path::new("manifest.jsonl")].clone()).unwrap();
    check(manifest.lines().count() == 12, || "manifest lines".into())?;
    for id in ["track_00000", "track_00001", "track_00002"] {
        let clean = io::read_png(&d.join(format!("in/{id}.png"))).unwrap();
        let zero = io::read_png(&d.join(format!("a/FOG_SLIGHT_0099_000/{id}.png"))).unwrap();
        check(clean == zero, || format!("strength-0 output for {id} differs"))?;
    }
    lines.push("inject idempotent across reruns and 1/4/8 threads");

    // 1: missing input, missing baseline, corrupt table
    let (code, _) = run(&["inject", "--images", "nope", "--scenarios", "s.jsonl", "--out", "c"], d);
    check(code == 1, || format!("missing input dir exit {code}"))?;
    run_ok(&["predict", "--faults", "a", "--truth", "in/truth.jsonl", "--out", "p.jsonl"], d)?;
    let (code, _) = run(&["evaluate", "--predictions", "p.jsonl", "--baseline-group", "NORMAL", "--out", "r"], d);
    check(code == 1, || format!("missing baseline exit {code}"))?;
    run_ok(&["predict", "--images", "in", "--faults", "a", "--truth", "in/truth.jsonl", "--out", "p.jsonl"], d)?;
    run_ok(&["evaluate", "--predictions", "p.jsonl", "--out", "r"], d)?;
    run_ok(&["build-lut", "--metrics", "r/metrics.csv", "--out", "t.flut"], d)?;
    let mut flut = std::fs::read(d.join("t.flut")).unwrap();
    flut[20] ^= 0xff;
    std::fs::write(d.join("bad.flut"), flut).unwrap();
    let (code, text) = run(&["query", "--lut", "bad.flut", "--category", "FOG", "--strength", "0.5"], d);
    check(code == 1 && text.contains("ChecksumError"), || format!("corrupt table exit {code}: {text}"))?;
    lines.push("exit 1 missing input / missing baseline / ChecksumError");

    // 2: usage
    let (code, text) = run(&["scenarios", "--category", "SMOG", "--count", "3", "--out", "x.jsonl"], d);
    check(code == 2 && text.contains("DUST_STORM"), || format!("unknown category exit {code}: {text}"))?;
    lines.push("exit 2 unknown category lists valid names");

    // 3: partial failure from an undecodable frame
    std::fs::create_dir_all(d.join("in2")).unwrap();
    std::fs::copy(d.join("in/track_00000.png"), d.join("in2/good.png")).unwrap();
    std::fs::write(d.join("in2/broken.png"), b"not a png").unwrap();
    let (code, _) = run(&["inject", "--images", "in2", "--scenarios", "s.jsonl", "--out", "c"], d);
    let m = std::fs::read_to_string(d.join("c/manifest.jsonl")).unwrap_or_default();
    check(code == 3 && m.matches("\"failed\"").count() == 4, || format!("partial failure exit {code}"))?;
    lines.push("exit 3 partial failure recorded in manifest");

    // 4: hit then miss
    let (code, text) = run(&["query", "--lut", "t.flut", "--category", "FOG", "--strength", "0.0"], d);
    check(code == 0 && text.contains("risk="), || format!("query hit exit {code}: {text}"))?;
    let (code, _) = run(&["query", "--lut", "t.flut", "--category", "CAMERA_YAW", "--strength", "0.5"], d);
    check(code == 4, || format!("query miss exit {code}"))?;
    lines.push("exit 4 not covered");

    Ok(lines.join("; "))
}

fn main() {
    // Respect `cargo test -- <filter>`: the suite has no sub-filters, so any
    // filter that is not a prefix of "acceptance" skips it.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if args.iter().any(|f| !"acceptance".contains(f.as_str())) {
        return;
    }
    let probes = probe_set();
    let criteria: Vec<Criterion> = vec![
        ("AC1 metric-oracle equivalence", Box::new(ac1_metric_oracle)),
        ("AC2 table delta reproduction", Box::new(ac2_table_deltas)),
        ("AC3 risk-rule anchoring", Box::new(ac3_risk_anchors)),
        ("AC4 degradation identity and determinism", Box::new(|| ac4_identity_determinism(&probes))),
        ("AC5 degradation monotonicity", Box::new(|| ac5_monotonicity(&probes))),
        ("AC6 end-to-end fog causality", Box::new(ac6_fog_causality)),
        ("AC7 lookup-table format", Box::new(ac7_lut_format)),
        ("AC8 bounded-latency query", Box::new(ac8_latency)),
        ("AC9 gate partition", Box::new(ac9_gate_partition)),
        ("AC10 spatial-error arithmetic", Box::new(ac10_spatial_error)),
        ("AC11 CLI idempotence and exit codes", Box::new(ac11_cli_contract)),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
