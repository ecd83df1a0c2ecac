//! Experiment configuration (TOML).
//!
//! ```toml
//! schema_version = 1
//! budget = 600
//! seeds = [1, 2, 3, 4, 5]
//! strategies = ["mraru", "random"]
//!
//! [dataset.synthetic]
//! classes = 3
//! dim = 16
//! per_class_counts = [1200, 1200, 1200]
//! class_mean_separation = 1.5
//! noise_sigma = 1.0
//! seed = 7
//!
//! [student]
//! kind = "logistic"
//! ```
//!
//! Unknown keys are rejected everywhere. Relative paths are resolved against
//! the directory holding the config file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::dataset::{generate_synthetic, load_pool, Pool, SyntheticSpec};
use crate::metrics::Metric;
use crate::oracle::{LlmOracleConfig, OracleMode};
use crate::sampling::{RejectedPolicy, Strategy, DEFAULT_BATCH_SIZE};
use crate::students::TrainConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Exactly one of `path` or `synthetic`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    pub batch_size: usize,
    pub rejected_policy: RejectedPolicy,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            batch_size: DEFAULT_BATCH_SIZE,
            rejected_policy: RejectedPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub mode: OracleMode,
    /// Replay mode only.
    pub noise_rate: f64,
    /// LLM mode only; defaults to `<out>/label_cache.jsonl`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub llm: Option<LlmOracleConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SummarySection {
    pub metric: Metric,
    pub thresholds: Vec<f64>,
}

impl Default for SummarySection {
    fn default() -> Self {
        Self {
            metric: Metric::Accuracy,
            thresholds: vec![0.9],
        }
    }
}

fn default_eval_fraction() -> f64 {
    0.2
}

fn default_eval_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub dataset: DatasetSource,
    #[serde(default = "default_eval_fraction")]
    pub eval_fraction: f64,
    pub student: TrainConfig,
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub oracle: OracleSection,
    pub budget: usize,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Upper bound on concurrently running cells; defaults to the core count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_parallel: Option<usize>,
    #[serde(default)]
    pub summary: SummarySection,
}

/// A validated config with its dataset loaded and paths resolved.
#[derive(Debug)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub pool: Pool,
    /// Digest of the config (minus output location) and dataset contents.
    pub config_digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::parse(&text)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable in TOML")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.dataset.path.as_mut() {
            fix(p);
        }
        if let Some(p) = self.oracle.cache_path.as_mut() {
            fix(p);
        }
        if let Some(p) = self.output_dir.as_mut() {
            fix(p);
        }
    }

    /// Checks every constraint, loads the dataset, and in LLM mode probes the
    /// endpoint. All problems found are reported together.
    pub fn prepare(self) -> Result<Prepared, HarnessError> {
        let mut errors = Vec::new();
        let c = &self;
        if c.schema_version != SCHEMA_VERSION {
            errors.push(format!(
                "schema_version must be {SCHEMA_VERSION}, got {}",
                c.schema_version
            ));
        }
        if !(c.eval_fraction > 0.0 && c.eval_fraction < 1.0) {
            errors.push(format!(
                "eval_fraction must be in (0, 1), got {}",
                c.eval_fraction
            ));
        }
        if c.strategies.is_empty() {
            errors.push("at least one strategy is required".into());
        }
        if c.strategies.iter().collect::<HashSet<_>>().len() != c.strategies.len() {
            errors.push("strategies contain duplicates".into());
        }
        if c.seeds.is_empty() {
            errors.push("at least one seed is required".into());
        }
        if c.seeds.iter().collect::<HashSet<_>>().len() != c.seeds.len() {
            errors.push("seeds contain duplicates".into());
        }
        if c.sampling.batch_size == 0 {
            errors.push("sampling.batch_size must be at least 1".into());
        }
        if c.eval_every == 0 {
            errors.push("eval_every must be at least 1".into());
        }
        if c.max_parallel == Some(0) {
            errors.push("max_parallel must be at least 1".into());
        }
        if let Err(e) = c.student.validate() {
            errors.push(format!("student: {e}"));
        }
        for t in &c.summary.thresholds {
            if !(*t > 0.0 && *t <= 1.0) {
                errors.push(format!("summary threshold {t} not in (0, 1]"));
            }
        }
        match c.oracle.mode {
            OracleMode::Replay => {
                if !(0.0..1.0).contains(&c.oracle.noise_rate) {
                    errors.push(format!(
                        "oracle.noise_rate must be in [0, 1), got {}",
                        c.oracle.noise_rate
                    ));
                }
            }
            OracleMode::Llm => match &c.oracle.llm {
                None => {
                    errors.push("oracle.mode = \"llm\" requires an [oracle.llm] section".into())
                }
                Some(llm) => {
                    if let Err(e) = llm.validate() {
                        errors.push(format!("oracle.llm: {e}"));
                    } else if let Err(e) = llm.check_connectivity() {
                        errors.push(format!("oracle.llm: {e}"));
                    }
                }
            },
        }

        let loaded = match (&c.dataset.path, &c.dataset.synthetic) {
            (Some(_), Some(_)) => {
                errors.push("dataset: give either path or synthetic, not both".into());
                None
            }
            (None, None) => {
                errors.push("dataset: path or synthetic is required".into());
                None
            }
            (Some(path), None) if !path.exists() => {
                errors.push(format!("dataset.path {} does not exist", path.display()));
                None
            }
            (Some(path), None) => match std::fs::read(path) {
                Ok(bytes) => match load_pool(path, None) {
                    Ok(pool) => Some((pool, sha256_hex(&bytes))),
                    Err(e) => {
                        errors.push(format!("dataset: {e}"));
                        None
                    }
                },
                Err(e) => {
                    errors.push(format!("dataset.path {}: {e}", path.display()));
                    None
                }
            },
            (None, Some(spec)) => match generate_synthetic(spec) {
                Ok(pool) => Some((pool, String::new())),
                Err(e) => {
                    errors.push(format!("dataset.synthetic: {e}"));
                    None
                }
            },
        };

        if let Some((pool, _)) = &loaded {
            let k = pool.num_classes();
            if c.budget < k {
                errors.push(format!("budget {} is below the class count {k}", c.budget));
            }
            match c.oracle.mode {
                OracleMode::Replay => {
                    let missing = pool
                        .items()
                        .iter()
                        .filter(|i| i.gold_label.is_none())
                        .count();
                    if missing > 0 {
                        errors.push(format!(
                            "replay oracle needs gold labels; {missing} items have none"
                        ));
                    }
                }
                OracleMode::Llm => {
                    let missing = pool
                        .items()
                        .iter()
                        .filter(|i| i.text.as_deref().is_none_or(|t| t.trim().is_empty()))
                        .count();
                    if missing > 0 {
                        errors.push(format!(
                            "llm oracle needs item text; {missing} items have none"
                        ));
                    }
                }
            }
        }

        match loaded {
            Some((pool, data_digest)) if errors.is_empty() => {
                let config_digest = self.digest(&data_digest);
                Ok(Prepared {
                    config: self,
                    pool,
                    config_digest,
                })
            }
            _ => Err(HarnessError::Invalid(errors)),
        }
    }

    fn digest(&self, data_digest: &str) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        canonical.max_parallel = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        sha256_hex(format!("{json}\n{data_digest}").as_bytes())
    }
}
