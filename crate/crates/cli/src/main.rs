//! `faultforge` command-line entry point.
//!
//! Exit codes: 0 success, 1 I/O or data error, 2 usage, 3 partial failure,
//! 4 fault condition not covered by the table.

mod commands;
mod config;
mod inject;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use faultforge::scenario::FaultCategory;

use config::{BackendMode, PipelineConfig};

#[derive(Debug)]
pub enum CliError {
    Data(String),
    Usage(String),
    Partial(String),
    NotCovered(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Data(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Partial(_) => 3,
            CliError::NotCovered(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Data(m) | CliError::Usage(m) | CliError::Partial(m) | CliError::NotCovered(m) => {
                f.write_str(m)
            }
        }
    }
}

/// Attaches context to a fallible I/O or decode step, mapping it to exit code 1.
pub(crate) trait Context<T> {
    fn ctx(self, what: impl fmt::Display) -> Result<T, CliError>;
}

impl<T, E: fmt::Display> Context<T> for Result<T, E> {
    fn ctx(self, what: impl fmt::Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::Data(format!("{what}: {e}")))
    }
}

fn parse_category(s: &str) -> Result<FaultCategory, String> {
    s.parse::<FaultCategory>()
        .map_err(|_| format!("unknown category `{s}`; valid categories: {}", FaultCategory::valid_names()))
}

fn parse_strength(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("strength {v} outside [0, 1]"))
    }
}

#[derive(Parser)]
#[command(name = "faultforge", version, about = "Fault injection, robustness metrics and lookup-table emulation")]
struct Cli {
    /// TOML config file; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic scenario file for one fault category.
    Scenarios {
        #[arg(long, value_parser = parse_category)]
        category: FaultCategory,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        count: u32,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        backend: Option<BackendMode>,
    },
    /// Render synthetic lane-track frames with exact ground truth.
    Fixtures {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        count: u32,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply every scenario to every image and write the fault tree plus manifest.
    Inject {
        #[arg(long)]
        images: Option<PathBuf>,
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        backend: Option<BackendMode>,
        #[arg(long, allow_negative_numbers = true)]
        gate_threshold: Option<f64>,
    },
    /// Run the classical lane estimator over clean and faulted frames.
    Predict {
        /// Clean frames, reported under the baseline group.
        #[arg(long)]
        images: Option<PathBuf>,
        /// Output directory of `inject` (reads its manifest.jsonl).
        #[arg(long)]
        faults: Option<PathBuf>,
        /// JSONL ground truth: {"image_id", "gt_x", "gt_y"} per line.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value = "NORMAL")]
        baseline_group: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-group metrics CSV and baseline comparison table.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, default_value = "NORMAL")]
        baseline_group: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distill a metrics CSV into a `.flut` lookup table.
    BuildLut {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        bucket_count: Option<u8>,
        #[arg(long, default_value = "NORMAL")]
        baseline_group: String,
        /// Also write the entries as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Look up one fault condition. Exit 4 when not covered.
    Query {
        #[arg(long)]
        lut: PathBuf,
        #[arg(long, value_parser = parse_category)]
        category: FaultCategory,
        #[arg(long, value_parser = parse_strength)]
        strength: f64,
    },
    /// Measure query latency over random lookups.
    Bench {
        #[arg(long)]
        lut: PathBuf,
        #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1000..))]
        iters: u64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Scenarios { category, count, seed, out, backend } => {
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            cfg.backend_mode = backend.unwrap_or(cfg.backend_mode);
            cfg.validate()?;
            let out = config::require(out, &cfg.scenario_file, "--out")?;
            commands::scenarios(&cfg, category, count as usize, &out)
        }
        Command::Fixtures { count, seed, out } => {
            let out = config::require(out, &cfg.input_dir, "--out")?;
            commands::fixtures(count as usize, seed.unwrap_or(cfg.master_seed), &out)
        }
        Command::Inject { images, scenarios, out, backend, gate_threshold } => {
            cfg.backend_mode = backend.unwrap_or(cfg.backend_mode);
            cfg.gate_threshold = gate_threshold.unwrap_or(cfg.gate_threshold);
            cfg.validate()?;
            let images = config::require(images, &cfg.input_dir, "--images")?;
            let scenarios = config::require(scenarios, &cfg.scenario_file, "--scenarios")?;
            let out = config::require(out, &cfg.output_dir, "--out")?;
            inject::run(&cfg, &images, &scenarios, &out)
        }
        Command::Predict { images, faults, truth, baseline_group, out } => {
            if images.is_none() && faults.is_none() {
                return Err(CliError::Usage("predict needs --images and/or --faults".into()));
            }
            commands::predict(images.as_deref(), faults.as_deref(), &truth, &baseline_group, &out)
        }
        Command::Evaluate { predictions, baseline_group, out } => {
            commands::evaluate(&predictions, &baseline_group, &out)
        }
        Command::BuildLut { metrics, out, bucket_count, baseline_group, csv } => {
            cfg.bucket_count = bucket_count.unwrap_or(cfg.bucket_count);
            cfg.validate()?;
            commands::build_lut(&metrics, &out, cfg.bucket_count, &baseline_group, csv.as_deref())
        }
        Command::Query { lut, category, strength } => commands::query(&lut, category, strength),
        Command::Bench { lut, iters } => commands::bench(&lut, iters as usize),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("faultforge: {e}");
            ExitCode::from(e.code())
        }
    }
}
