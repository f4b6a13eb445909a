//! Pipeline configuration: defaults, overridden by a TOML file, overridden by flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    Stub,
    Remote,
}

/// Keys accepted in the `--config` file. All optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub scenario_file: Option<PathBuf>,
    pub backend_mode: Option<BackendMode>,
    pub gate_threshold: Option<f64>,
    pub bucket_count: Option<u8>,
    pub master_seed: Option<u64>,
    pub timeout_ms: Option<u64>,
    pub max_retries: Option<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub scenario_file: Option<PathBuf>,
    pub backend_mode: BackendMode,
    pub gate_threshold: f64,
    pub bucket_count: u8,
    pub master_seed: u64,
    pub timeout_ms: u64,
    pub max_retries: u8,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input_dir: None,
            output_dir: None,
            scenario_file: None,
            backend_mode: BackendMode::Stub,
            gate_threshold: faultforge::genai_client::DEFAULT_GATE_THRESHOLD,
            bucket_count: faultforge::faultlut::DEFAULT_BUCKETS,
            master_seed: 0,
            timeout_ms: 30_000,
            max_retries: 3,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
            let file: FileConfig = toml::from_str(&text)
                .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
            cfg.merge(file);
        }
        Ok(cfg)
    }

    fn merge(&mut self, f: FileConfig) {
        self.input_dir = f.input_dir.or(self.input_dir.take());
        self.output_dir = f.output_dir.or(self.output_dir.take());
        self.scenario_file = f.scenario_file.or(self.scenario_file.take());
        self.backend_mode = f.backend_mode.unwrap_or(self.backend_mode);
        self.gate_threshold = f.gate_threshold.unwrap_or(self.gate_threshold);
        self.bucket_count = f.bucket_count.unwrap_or(self.bucket_count);
        self.master_seed = f.master_seed.unwrap_or(self.master_seed);
        self.timeout_ms = f.timeout_ms.unwrap_or(self.timeout_ms);
        self.max_retries = f.max_retries.unwrap_or(self.max_retries);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(-1.0..=1.0).contains(&self.gate_threshold) {
            return Err(CliError::Usage(format!("gate_threshold {} outside [-1, 1]", self.gate_threshold)));
        }
        if !(2..=64).contains(&self.bucket_count) {
            return Err(CliError::Usage(format!("bucket_count {} outside [2, 64]", self.bucket_count)));
        }
        if self.timeout_ms == 0 {
            return Err(CliError::Usage("timeout_ms must be positive".into()));
        }
        if self.max_retries > faultforge::genai_client::MAX_RETRIES_LIMIT {
            return Err(CliError::Usage(format!("max_retries {} exceeds 5", self.max_retries)));
        }
        Ok(())
    }
}

/// Picks the flag, else the config value, else fails with a usage error naming both.
pub fn require(flag: Option<PathBuf>, cfg: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    flag.or_else(|| cfg.clone())
        .ok_or_else(|| CliError::Usage(format!("missing {what} (pass the flag or set it in --config)")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_override_defaults() {
        let mut cfg = PipelineConfig::default();
        let file: FileConfig = toml::from_str("gate_threshold = 0.4\nbackend_mode = \"remote\"\nbucket_count = 20").unwrap();
        cfg.merge(file);
        assert_eq!(cfg.gate_threshold, 0.4);
        assert_eq!(cfg.backend_mode, BackendMode::Remote);
        assert_eq!(cfg.bucket_count, 20);
        assert_eq!(cfg.master_seed, 0);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("colour = 1").is_err());
    }

    #[test]
    fn ranges_checked() {
        let cfg = PipelineConfig { gate_threshold: 1.5, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
        let cfg = PipelineConfig { bucket_count: 1, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
    }
}
