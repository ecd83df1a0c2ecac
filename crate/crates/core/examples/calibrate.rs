//! Sweeps blob separation and reports how many labels random and M-RARU need
//! to reach a target metric with the logistic student.
//!
//! ```text
//! cargo run --release --example calibrate -- <metric> <target> <budget> <counts> <sep>...
//! cargo run --release --example calibrate -- accuracy 0.9 1200 1200,1200,1200 1.6 1.8 2.0
//! ```

use akd_core::dataset::{generate_synthetic, split, SyntheticSpec};
use akd_core::harness::median;
use akd_core::metrics::{labels_to_threshold, Metric, RunMeta};
use akd_core::oracle::Teacher;
use akd_core::sampling::{run_active_loop, LoopSettings, Strategy, StrategyConfig};
use akd_core::students::{StudentKind, TrainConfig};
use rayon::prelude::*;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let metric: Metric = args[0].parse().expect("metric");
    let target: f64 = args[1].parse().expect("target");
    let budget: usize = args[2].parse().expect("budget");
    let counts: Vec<usize> = args[3]
        .split(',')
        .map(|c| c.parse().expect("count"))
        .collect();
    let total: usize = counts.iter().sum();
    let seeds: u64 = std::env::var("SEEDS")
        .ok()
        .map_or(5, |s| s.parse().expect("SEEDS"));
    let offset: u64 = std::env::var("SEED_OFFSET")
        .ok()
        .map_or(0, |s| s.parse().expect("SEED_OFFSET"));
    for sep in &args[4..] {
        let sep: f64 = sep.parse().expect("sep");
        let pool = generate_synthetic(&SyntheticSpec {
            classes: counts.len(),
            dim: 16,
            per_class_counts: counts.clone(),
            class_mean_separation: sep,
            noise_sigma: 1.0,
            seed: 7,
        })
        .unwrap();
        let eval_fraction = 600.0 / total as f64;
        let mut line = format!("sep={sep}");
        for strategy in [Strategy::Random, Strategy::Mraru] {
            let mut hits: Vec<Option<usize>> = (offset + 1..=offset + seeds)
                .into_par_iter()
                .map(|seed| {
                    let sp = split(&pool, eval_fraction, seed).unwrap();
                    let mut teacher = Teacher::replay(0.0, seed).unwrap();
                    let ledger = run_active_loop(
                        &pool,
                        &sp,
                        &TrainConfig::default_for(StudentKind::Logistic),
                        &StrategyConfig::new(strategy, seed),
                        &mut teacher,
                        &LoopSettings {
                            budget,
                            eval_every: 1,
                        },
                        RunMeta {
                            run_id: format!("{strategy}-{seed}"),
                            strategy: strategy.to_string(),
                            student: "logistic".into(),
                            seed,
                            config_digest: String::new(),
                        },
                    )
                    .unwrap();
                    let curve: Vec<String> = ledger
                        .rows
                        .iter()
                        .filter(|r| r.labels_spent % 100 < 25 && r.labels_spent >= 100)
                        .map(|r| format!("{:.3}", metric.of(r).unwrap()))
                        .collect();
                    eprintln!("  {strategy} seed {seed}: {}", curve.join(" "));
                    labels_to_threshold(&ledger, target, metric)
                })
                .collect();
            hits.sort();
            let mut values: Vec<f64> = hits.iter().map(|h| h.unwrap_or(budget) as f64).collect();
            line += &format!(
                "  {strategy}: {hits:?} median {}",
                median(&mut values).unwrap()
            );
        }
        println!("{line}");
    }
}
