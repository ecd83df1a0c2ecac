//! Threshold summaries: how many labels each strategy needed to reach a
//! target, and M-RARU's saving against random.

use std::collections::BTreeMap;

use crate::metrics::{first_reaching, CurveRow, Metric, RunLedger};
use crate::sampling::Strategy;

/// One run's learning curve reduced to `(labels_spent, metric)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct RunCurve {
    pub run_id: String,
    pub strategy: String,
    pub student: String,
    pub points: Vec<(usize, Option<f64>)>,
}

impl RunCurve {
    pub fn from_ledger(ledger: &RunLedger, metric: Metric) -> Self {
        Self {
            run_id: ledger.meta.run_id.clone(),
            strategy: ledger.meta.strategy.clone(),
            student: ledger.meta.student.clone(),
            points: ledger
                .rows
                .iter()
                .map(|r| (r.labels_spent, metric.of(r)))
                .collect(),
        }
    }

    /// Groups curve-file rows by run id, keeping file order within a run.
    pub fn from_curve_rows(rows: &[CurveRow], metric: Metric) -> Vec<Self> {
        let mut runs: BTreeMap<&str, RunCurve> = BTreeMap::new();
        for r in rows {
            let value = match metric {
                Metric::Accuracy => r.accuracy,
                Metric::BalancedAccuracy => r.balanced_accuracy,
            };
            runs.entry(&r.run_id)
                .or_insert_with(|| RunCurve {
                    run_id: r.run_id.clone(),
                    strategy: r.strategy.clone(),
                    student: r.student.clone(),
                    points: Vec::new(),
                })
                .points
                .push((r.labels_spent, value));
        }
        runs.into_values().collect()
    }

    pub fn labels_to_threshold(&self, target: f64) -> Option<usize> {
        first_reaching(self.points.iter().copied(), target)
    }

    /// Labels spent by the end of the run; the censoring point when the
    /// threshold was never reached.
    pub fn final_labels(&self) -> usize {
        self.points.iter().map(|p| p.0).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReachStatus {
    /// Every run reached the threshold.
    Reached,
    /// Some runs did not; their final label counts stand in as lower bounds.
    Censored,
    NotReached,
}

impl ReachStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Reached => "reached",
            Self::Censored => "censored",
            Self::NotReached => "not_reached",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySummary {
    pub student: String,
    pub threshold: f64,
    pub strategy: String,
    pub runs: usize,
    pub reached: usize,
    /// Median over runs, using final label counts for runs that never
    /// reached the threshold.
    pub median_labels: f64,
    pub status: ReachStatus,
    /// `(random - mraru) / random * 100`, on the M-RARU row only.
    pub reduction_vs_random_pct: Option<f64>,
    /// Status of the reduction: `censored` when either median is censored.
    pub reduction_status: Option<ReachStatus>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Per (student, threshold, strategy) medians, sorted by student, threshold
/// and strategy name.
pub fn summarize(runs: &[RunCurve], thresholds: &[f64]) -> Vec<StrategySummary> {
    let mut groups: BTreeMap<(&str, &str), Vec<&RunCurve>> = BTreeMap::new();
    for r in runs {
        groups.entry((&r.student, &r.strategy)).or_default().push(r);
    }
    let mut out = Vec::new();
    let students: Vec<&str> = {
        let mut s: Vec<&str> = groups.keys().map(|k| k.0).collect();
        s.dedup();
        s
    };
    for student in students {
        for &threshold in thresholds {
            let mut rows: Vec<StrategySummary> = groups
                .iter()
                .filter(|((s, _), _)| *s == student)
                .map(|((_, strategy), members)| {
                    let reached_at: Vec<Option<usize>> = members
                        .iter()
                        .map(|r| r.labels_to_threshold(threshold))
                        .collect();
                    let reached = reached_at.iter().flatten().count();
                    let mut values: Vec<f64> = members
                        .iter()
                        .zip(&reached_at)
                        .map(|(r, at)| at.unwrap_or_else(|| r.final_labels()) as f64)
                        .collect();
                    let status = match reached {
                        0 => ReachStatus::NotReached,
                        n if n == members.len() => ReachStatus::Reached,
                        _ => ReachStatus::Censored,
                    };
                    StrategySummary {
                        student: student.to_string(),
                        threshold,
                        strategy: strategy.to_string(),
                        runs: members.len(),
                        reached,
                        median_labels: median(&mut values).expect("groups are non-empty"),
                        status,
                        reduction_vs_random_pct: None,
                        reduction_status: None,
                    }
                })
                .collect();
            let random = rows
                .iter()
                .find(|r| r.strategy == Strategy::Random.as_str())
                .cloned();
            if let (Some(random), Some(mraru)) = (
                random,
                rows.iter_mut()
                    .find(|r| r.strategy == Strategy::Mraru.as_str()),
            ) {
                if mraru.status == ReachStatus::NotReached {
                    mraru.reduction_status = Some(ReachStatus::NotReached);
                } else if random.median_labels > 0.0 {
                    mraru.reduction_vs_random_pct = Some(
                        (random.median_labels - mraru.median_labels) / random.median_labels * 100.0,
                    );
                    mraru.reduction_status = Some(
                        if random.status == ReachStatus::Reached
                            && mraru.status == ReachStatus::Reached
                        {
                            ReachStatus::Reached
                        } else {
                            ReachStatus::Censored
                        },
                    );
                }
            }
            out.extend(rows);
        }
    }
    out
}

pub const SUMMARY_HEADER: [&str; 10] = [
    "student",
    "metric",
    "threshold",
    "strategy",
    "runs",
    "reached",
    "median_labels",
    "status",
    "reduction_vs_random_pct",
    "reduction_status",
];

pub fn render_summary(rows: &[StrategySummary], metric: Metric) -> String {
    let metric = match metric {
        Metric::Accuracy => "accuracy",
        Metric::BalancedAccuracy => "balanced_accuracy",
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.student.clone(),
            metric.to_string(),
            r.threshold.to_string(),
            r.strategy.clone(),
            r.runs.to_string(),
            r.reached.to_string(),
            r.median_labels.to_string(),
            r.status.as_str().to_string(),
            r.reduction_vs_random_pct
                .map(|p| format!("{p:.2}"))
                .unwrap_or_default(),
            r.reduction_status
                .map(|s| s.as_str().to_string())
                .unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}
