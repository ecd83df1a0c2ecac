use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use akd_core::dataset::SyntheticSpec;
use akd_core::harness::{cmd_compare, cmd_generate, cmd_run_file, render_summary, RunOverrides};
use akd_core::metrics::Metric;
use akd_core::sampling::Strategy;

/// Active knowledge distillation experiments.
#[derive(Debug, Parser)]
#[command(name = "akd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic Gaussian-blob pool to <out>/pool.jsonl.
    Generate {
        #[arg(long)]
        classes: usize,
        #[arg(long)]
        dim: usize,
        /// Items per class (use --counts for unequal classes).
        #[arg(long, conflicts_with = "counts")]
        per_class: Option<usize>,
        /// Comma-separated per-class item counts.
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
        /// Distance of each class mean from the origin.
        #[arg(long)]
        sep: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every (strategy x seed) cell of an experiment config.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
        /// Replaces the config's seed list (repeatable).
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        /// Replaces the config's strategy list (repeatable).
        #[arg(long = "strategy")]
        strategies: Vec<Strategy>,
        #[arg(long)]
        eval_every: Option<usize>,
        #[arg(long)]
        max_parallel: Option<usize>,
    },
    /// Summarize a curve file: labels needed per strategy to reach thresholds.
    Compare {
        curves: PathBuf,
        /// Target metric values (repeatable).
        #[arg(long = "threshold", required = true)]
        thresholds: Vec<f64>,
        #[arg(long, default_value = "accuracy")]
        metric: Metric,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate {
            classes,
            dim,
            per_class,
            counts,
            sep,
            sigma,
            seed,
            out,
        } => {
            let per_class_counts = match (per_class, counts) {
                (Some(n), None) => vec![n; classes],
                (None, Some(c)) => c,
                _ => bail!("give --per-class or --counts"),
            };
            let spec = SyntheticSpec {
                classes,
                dim,
                per_class_counts,
                class_mean_separation: sep,
                noise_sigma: sigma,
                seed,
            };
            let path = cmd_generate(&spec, &out)?;
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            config,
            out,
            budget,
            seeds,
            strategies,
            eval_every,
            max_parallel,
        } => {
            let overrides = RunOverrides {
                out,
                budget,
                seeds: (!seeds.is_empty()).then_some(seeds),
                strategies: (!strategies.is_empty()).then_some(strategies),
                eval_every,
                max_parallel,
            };
            let outcome = cmd_run_file(&config, &overrides)?;
            for cell in &outcome.cells {
                let m = &cell.ledger.meta;
                match &cell.error {
                    None => println!(
                        "{} {} {} seed={} labels={}",
                        m.run_id,
                        m.strategy,
                        m.student,
                        m.seed,
                        cell.ledger.labels_spent()
                    ),
                    Some(e) => {
                        eprintln!("{} {} seed={} ABORTED: {e}", m.run_id, m.strategy, m.seed)
                    }
                }
            }
            println!("outputs in {}", outcome.out_dir.display());
            Ok(if outcome.any_aborted() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Compare {
            curves,
            thresholds,
            metric,
            out,
        } => {
            let text =
                std::fs::read_to_string(&curves).with_context(|| curves.display().to_string())?;
            let table = render_summary(&cmd_compare(&text, &thresholds, metric)?, metric);
            match out {
                Some(path) => {
                    std::fs::write(&path, table).with_context(|| path.display().to_string())?
                }
                None => print!("{table}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
