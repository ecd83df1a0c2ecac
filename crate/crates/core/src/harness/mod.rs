//! Config-driven experiment runner: every (strategy × seed) cell of an
//! [`ExperimentConfig`] runs the active loop, and the results land under one
//! output directory together with a digest manifest.
//!
//! Layout of `<out>`:
//!
//! ```text
//! ledgers/<run_id>.json   one ledger per cell (also for aborted cells)
//! curves.csv              all ledger rows, see metrics::emit_curves
//! summary.csv             labels-to-threshold medians, see render_summary
//! manifest.json           relative path, byte length and SHA-256 of each file
//! ```

mod compare;
mod config;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{
    median, render_summary, summarize, ReachStatus, RunCurve, StrategySummary, SUMMARY_HEADER,
};
pub use config::{
    sha256_hex, DatasetSource, ExperimentConfig, OracleSection, Prepared, SamplingSection,
    SummarySection, SCHEMA_VERSION,
};

use crate::dataset::{generate_synthetic, serialize_pool, split, DatasetError, SyntheticSpec};
use crate::metrics::{emit_curves, parse_curves, Metric, MetricsError, RunLedger, RunMeta};
use crate::oracle::{LabelCache, OracleError, OracleMode, Teacher};
use crate::sampling::{run_active_loop, LoopSettings, Strategy, StrategyConfig};
use crate::students::StudentKind;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("no output directory: pass one or set output_dir")]
    NoOutputDir,
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Stable identifier of one cell: a digest of the config digest, strategy,
/// student kind and seed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunId(String);

impl RunId {
    pub fn new(config_digest: &str, strategy: Strategy, student: StudentKind, seed: u64) -> Self {
        let digest =
            sha256_hex(format!("{config_digest}\n{strategy}\n{student}\n{seed}").as_bytes());
        Self(digest[..16].to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for RunId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
    pub files: Vec<ManifestEntry>,
}

/// Writes `manifest.json` covering `files` (paths relative to `dir`).
pub fn write_manifest(
    dir: &Path,
    files: &[String],
    config_digest: Option<String>,
) -> Result<Manifest, HarnessError> {
    let mut entries = files
        .iter()
        .map(|rel| {
            let path = dir.join(rel);
            let bytes = std::fs::read(&path).map_err(io_err(&path))?;
            Ok(ManifestEntry {
                path: rel.clone(),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        config_digest,
        files: entries,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(manifest)
}

fn write_file(dir: &Path, rel: &str, contents: &str) -> Result<String, HarnessError> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(&path, contents).map_err(io_err(&path))?;
    Ok(rel.to_string())
}

/// Generates a synthetic pool into `<out>/pool.jsonl` plus a manifest.
pub fn cmd_generate(spec: &SyntheticSpec, out: &Path) -> Result<PathBuf, HarnessError> {
    let pool = generate_synthetic(spec)?;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let spec_json = serde_json::to_string_pretty(spec).expect("spec serializes") + "\n";
    let files = vec![
        write_file(out, "pool.jsonl", &serialize_pool(&pool))?,
        write_file(out, "spec.json", &spec_json)?,
    ];
    write_manifest(out, &files, None)?;
    Ok(out.join("pool.jsonl"))
}

/// One finished or aborted cell.
#[derive(Debug)]
pub struct CellOutcome {
    pub ledger: RunLedger,
    /// Error text when the cell aborted.
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub cells: Vec<CellOutcome>,
    pub manifest: Manifest,
}

impl RunOutcome {
    pub fn any_aborted(&self) -> bool {
        self.cells.iter().any(|c| c.error.is_some())
    }

    pub fn ledgers(&self) -> Vec<&RunLedger> {
        self.cells.iter().map(|c| &c.ledger).collect()
    }
}

/// Command-line overrides of config keys.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub out: Option<PathBuf>,
    pub budget: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub strategies: Option<Vec<Strategy>>,
    pub eval_every: Option<usize>,
    pub max_parallel: Option<usize>,
}

impl RunOverrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(v) = &self.out {
            config.output_dir = Some(v.clone());
        }
        if let Some(v) = self.budget {
            config.budget = v;
        }
        if let Some(v) = &self.seeds {
            config.seeds = v.clone();
        }
        if let Some(v) = &self.strategies {
            config.strategies = v.clone();
        }
        if let Some(v) = self.eval_every {
            config.eval_every = v;
        }
        if let Some(v) = self.max_parallel {
            config.max_parallel = Some(v);
        }
    }
}

/// Loads, overrides, validates and runs a config file.
pub fn cmd_run_file(
    config_path: &Path,
    overrides: &RunOverrides,
) -> Result<RunOutcome, HarnessError> {
    let mut config = ExperimentConfig::load(config_path)?;
    overrides.apply(&mut config);
    cmd_run(config)
}

/// Validates `config` (failing before any cell starts), runs every cell, and
/// writes ledgers, curves, summary and manifest under the output directory.
pub fn cmd_run(config: ExperimentConfig) -> Result<RunOutcome, HarnessError> {
    let out_dir = config.output_dir.clone().ok_or(HarnessError::NoOutputDir)?;
    let prepared = config.prepare()?;
    let Prepared {
        config,
        pool,
        config_digest,
    } = &prepared;

    let shared_cache = match config.oracle.mode {
        OracleMode::Llm => {
            std::fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
            let path = config
                .oracle
                .cache_path
                .clone()
                .unwrap_or_else(|| out_dir.join("label_cache.jsonl"));
            Some(LabelCache::open(path)?)
        }
        OracleMode::Replay => None,
    };

    let student = config.student.kind();
    let cells: Vec<(Strategy, u64)> = config
        .strategies
        .iter()
        .flat_map(|&s| config.seeds.iter().map(move |&seed| (s, seed)))
        .collect();

    let run_cell = |&(strategy, seed): &(Strategy, u64)| -> CellOutcome {
        let meta = RunMeta {
            run_id: RunId::new(config_digest, strategy, student, seed).to_string(),
            strategy: strategy.to_string(),
            student: student.to_string(),
            seed,
            config_digest: config_digest.clone(),
        };
        let settings = LoopSettings {
            budget: config.budget,
            eval_every: config.eval_every,
        };
        let aborted = |meta: RunMeta, error: String| CellOutcome {
            ledger: RunLedger {
                stop: Some(crate::metrics::StopReason::Aborted {
                    error: error.clone(),
                }),
                ..RunLedger::new(meta, settings.budget)
            },
            error: Some(error),
        };
        let sp = match split(pool, config.eval_fraction, seed) {
            Ok(sp) => sp,
            Err(e) => return aborted(meta, e.to_string()),
        };
        let teacher = match &shared_cache {
            Some(cache) => {
                Teacher::llm(config.oracle.llm.clone().expect("validated"), cache.clone())
            }
            None => Teacher::replay(config.oracle.noise_rate, seed),
        };
        let mut teacher = match teacher {
            Ok(t) => t,
            Err(e) => return aborted(meta, e.to_string()),
        };
        let strategy_cfg = StrategyConfig {
            strategy,
            batch_size: config.sampling.batch_size,
            rng_seed: seed,
            rejected_policy: config.sampling.rejected_policy,
        };
        let student_cfg = config.student.clone().with_seed(seed);
        match run_active_loop(
            pool,
            &sp,
            &student_cfg,
            &strategy_cfg,
            &mut teacher,
            &settings,
            meta,
        ) {
            Ok(ledger) => CellOutcome {
                ledger,
                error: None,
            },
            Err(aborted) => CellOutcome {
                error: Some(aborted.error.to_string()),
                ledger: aborted.ledger,
            },
        }
    };

    let threads = config
        .max_parallel
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let workers = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    let cells: Vec<CellOutcome> = workers.install(|| {
        use rayon::prelude::*;
        cells.par_iter().map(run_cell).collect()
    });

    std::fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let mut files = Vec::new();
    for cell in &cells {
        let text = serde_json::to_string_pretty(&cell.ledger).expect("ledger serializes") + "\n";
        files.push(write_file(
            &out_dir,
            &format!("ledgers/{}.json", cell.ledger.meta.run_id),
            &text,
        )?);
    }
    let ledgers: Vec<RunLedger> = cells.iter().map(|c| c.ledger.clone()).collect();
    files.push(write_file(&out_dir, "curves.csv", &emit_curves(&ledgers))?);
    let metric = config.summary.metric;
    let curves: Vec<RunCurve> = ledgers
        .iter()
        .map(|l| RunCurve::from_ledger(l, metric))
        .collect();
    let summary = render_summary(&summarize(&curves, &config.summary.thresholds), metric);
    files.push(write_file(&out_dir, "summary.csv", &summary)?);
    files.push(write_file(&out_dir, "config.toml", &config.to_toml())?);
    let manifest = write_manifest(&out_dir, &files, Some(config_digest.clone()))?;

    Ok(RunOutcome {
        out_dir,
        cells,
        manifest,
    })
}

/// Summarizes a curve file at the given thresholds.
pub fn cmd_compare(
    curve_text: &str,
    thresholds: &[f64],
    metric: Metric,
) -> Result<Vec<StrategySummary>, HarnessError> {
    if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(HarnessError::Invalid(vec![format!(
            "threshold {t} not in (0, 1]"
        )]));
    }
    let rows = parse_curves(curve_text)?;
    Ok(summarize(
        &RunCurve::from_curve_rows(&rows, metric),
        thresholds,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(out: &Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::parse(
            r#"
schema_version = 1
budget = 80
seeds = [1, 2]
strategies = ["mraru", "random"]
eval_every = 2

[dataset.synthetic]
classes = 3
dim = 4
per_class_counts = [60, 60, 60]
class_mean_separation = 2.0
noise_sigma = 1.0
seed = 3

[student]
kind = "logistic"
max_epochs = 200
"#,
        )
        .unwrap();
        c.output_dir = Some(out.to_path_buf());
        c
    }

    #[test]
    fn run_ids_are_stable_and_distinct() {
        let a = RunId::new("d", Strategy::Mraru, StudentKind::Lda, 1);
        assert_eq!(a, RunId::new("d", Strategy::Mraru, StudentKind::Lda, 1));
        assert_ne!(a, RunId::new("d", Strategy::Random, StudentKind::Lda, 1));
        assert_ne!(a, RunId::new("d", Strategy::Mraru, StudentKind::Lda, 2));
        assert_eq!(a.as_str().len(), 16);
    }

    #[test]
    fn run_writes_every_cell_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let outcome = cmd_run(config(dir.path())).unwrap();
        assert_eq!(outcome.cells.len(), 4);
        assert!(!outcome.any_aborted());
        let manifest: Manifest = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(
            manifest
                .files
                .iter()
                .filter(|f| f.path.starts_with("ledgers/"))
                .count(),
            4
        );
        for f in &manifest.files {
            let bytes = std::fs::read(dir.path().join(&f.path)).unwrap();
            assert_eq!(sha256_hex(&bytes), f.sha256);
        }
        let curves = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
        let rows = cmd_compare(&curves, &[0.5], Metric::Accuracy).unwrap();
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn missing_output_dir_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(dir.path());
        c.output_dir = None;
        assert!(matches!(cmd_run(c), Err(HarnessError::NoOutputDir)));
    }

    #[test]
    fn generate_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec {
            classes: 3,
            dim: 16,
            per_class_counts: vec![400; 3],
            class_mean_separation: 3.0,
            noise_sigma: 1.0,
            seed: 7,
        };
        let a = cmd_generate(&spec, &dir.path().join("a")).unwrap();
        let b = cmd_generate(&spec, &dir.path().join("b")).unwrap();
        let text = std::fs::read_to_string(&a).unwrap();
        assert_eq!(text.lines().count(), 1 + 1200);
        assert_eq!(text, std::fs::read_to_string(b).unwrap());
        let bad = SyntheticSpec {
            noise_sigma: 0.0,
            ..spec
        };
        assert!(cmd_generate(&bad, &dir.path().join("c")).is_err());
    }
}
