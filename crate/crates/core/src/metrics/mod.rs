//! Evaluation metrics, run ledgers and sampling-efficiency accounting.

mod curves;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use curves::{emit_curves, format_sig6, parse_curves, write_curves, CurveRow, CURVE_HEADER};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("confusion matrix is empty")]
    EmptyConfusion,
    #[error("no class has support")]
    NoSupport,
    #[error("ledger has no selection batches")]
    NoBatches,
    #[error("no candidates were examined")]
    NoCandidates,
    #[error("{batches} batches but {sizes} pool sizes")]
    LengthMismatch { batches: usize, sizes: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("curve file line {line}: {message}")]
    MalformedCurve { line: usize, message: String },
    #[error("curve io: {0}")]
    Io(String),
}

/// `counts[i][j]`: items of true class `i` predicted as `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    counts: Vec<Vec<u64>>,
}

impl ConfusionCounts {
    pub fn zeros(classes: usize) -> Self {
        Self {
            counts: vec![vec![0; classes]; classes],
        }
    }

    /// Builds from a square matrix; panics if it is not square.
    pub fn from_matrix(counts: Vec<Vec<u64>>) -> Self {
        let k = counts.len();
        assert!(
            counts.iter().all(|r| r.len() == k),
            "confusion matrix must be square"
        );
        Self { counts }
    }

    pub fn from_predictions(
        classes: usize,
        truth: &[usize],
        predicted: &[usize],
    ) -> Result<Self, MetricsError> {
        let mut c = Self::zeros(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            c.record(t, p)?;
        }
        Ok(c)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<(), MetricsError> {
        let classes = self.num_classes();
        for label in [truth, predicted] {
            if label >= classes {
                return Err(MetricsError::LabelOutOfRange { label, classes });
            }
        }
        self.counts[truth][predicted] += 1;
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn true_positives(&self, class: usize) -> u64 {
        self.counts[class][class]
    }

    /// Row total minus the diagonal.
    pub fn false_negatives(&self, class: usize) -> u64 {
        self.support(class) - self.counts[class][class]
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }
}

/// Fraction of items on the diagonal.
pub fn accuracy(c: &ConfusionCounts) -> Result<f64, MetricsError> {
    let total = c.total();
    if total == 0 {
        return Err(MetricsError::EmptyConfusion);
    }
    let correct: u64 = (0..c.num_classes()).map(|k| c.true_positives(k)).sum();
    Ok(correct as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalancedAccuracy {
    pub value: f64,
    /// Classes with no true instances, left out of the mean.
    pub excluded_classes: usize,
}

/// Mean per-class recall over the classes that have support.
pub fn balanced_accuracy_detail(c: &ConfusionCounts) -> Result<BalancedAccuracy, MetricsError> {
    let recalls: Vec<f64> = (0..c.num_classes())
        .filter(|&k| c.support(k) > 0)
        .map(|k| {
            let tp = c.true_positives(k);
            tp as f64 / (tp + c.false_negatives(k)) as f64
        })
        .collect();
    if recalls.is_empty() {
        return Err(MetricsError::NoSupport);
    }
    Ok(BalancedAccuracy {
        value: recalls.iter().sum::<f64>() / recalls.len() as f64,
        excluded_classes: c.num_classes() - recalls.len(),
    })
}

pub fn balanced_accuracy(c: &ConfusionCounts) -> Result<f64, MetricsError> {
    balanced_accuracy_detail(c).map(|b| b.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowPhase {
    /// Initial class-coverage labels.
    Seed,
    Batch,
}

/// One labeling round. Counters other than `labels_spent` are per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub phase: RowPhase,
    pub batch: usize,
    /// Cumulative size of L after this round.
    pub labels_spent: usize,
    pub accepted: usize,
    pub candidates_examined: u64,
    /// Student inferences spent selecting this round (evaluation excluded).
    pub selection_inferences: u64,
    /// Labels requested from the teacher this round.
    pub oracle_calls: u64,
    /// |U| when the round started.
    pub unlabeled_at_start: usize,
    pub accuracy: Option<f64>,
    pub balanced_accuracy: Option<f64>,
    /// Cumulative accepted / examined over selection batches so far.
    pub acceptance_rate_to_date: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub run_id: String,
    pub strategy: String,
    pub student: String,
    pub seed: u64,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    BudgetReached,
    PoolExhausted,
    /// A batch accepted nothing within its visit budget.
    SelectionExhausted {
        candidates_examined: u64,
        selection_inferences: u64,
    },
    Aborted {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub meta: RunMeta,
    pub budget: usize,
    pub rows: Vec<LedgerRow>,
    pub stop: Option<StopReason>,
}

impl RunLedger {
    pub fn new(meta: RunMeta, budget: usize) -> Self {
        Self {
            meta,
            budget,
            rows: Vec::new(),
            stop: None,
        }
    }

    pub fn labels_spent(&self) -> usize {
        self.rows.last().map_or(0, |r| r.labels_spent)
    }

    pub fn batch_rows(&self) -> impl Iterator<Item = &LedgerRow> {
        self.rows.iter().filter(|r| r.phase == RowPhase::Batch)
    }

    /// Accounting identities every ledger must satisfy: strictly increasing
    /// labels, oracle calls equal to label increments, at least as many
    /// candidates as acceptances, and no row past the budget.
    pub fn check_accounting(&self) -> Result<(), String> {
        let mut prev = 0;
        for (i, row) in self.rows.iter().enumerate() {
            if row.labels_spent <= prev && i > 0 {
                return Err(format!(
                    "row {i}: labels_spent {} not increasing",
                    row.labels_spent
                ));
            }
            if row.oracle_calls != (row.labels_spent - prev) as u64 {
                return Err(format!(
                    "row {i}: oracle_calls {} != label increment {}",
                    row.oracle_calls,
                    row.labels_spent - prev
                ));
            }
            if row.accepted != row.labels_spent - prev {
                return Err(format!(
                    "row {i}: accepted {} != label increment",
                    row.accepted
                ));
            }
            if row.candidates_examined < row.accepted as u64 {
                return Err(format!("row {i}: fewer candidates than acceptances"));
            }
            if row.labels_spent > self.budget {
                return Err(format!(
                    "row {i}: labels_spent {} exceeds budget {}",
                    row.labels_spent, self.budget
                ));
            }
            prev = row.labels_spent;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub acceptance_rate: f64,
    pub mraru_inferences: u64,
    pub exhaustive_inferences_equivalent: u64,
    pub speedup: f64,
}

/// Compares M-RARU's selection cost with an exhaustive scan of U before every
/// batch. `pool_size_per_batch[i]` is |U| at the start of selection batch `i`.
pub fn efficiency_report(
    ledger: &RunLedger,
    pool_size_per_batch: &[usize],
) -> Result<EfficiencyReport, MetricsError> {
    let batches: Vec<&LedgerRow> = ledger.batch_rows().collect();
    if batches.is_empty() {
        return Err(MetricsError::NoBatches);
    }
    if batches.len() != pool_size_per_batch.len() {
        return Err(MetricsError::LengthMismatch {
            batches: batches.len(),
            sizes: pool_size_per_batch.len(),
        });
    }
    let examined: u64 = batches.iter().map(|r| r.candidates_examined).sum();
    if examined == 0 {
        return Err(MetricsError::NoCandidates);
    }
    let accepted: u64 = batches.iter().map(|r| r.accepted as u64).sum();
    let mraru_inferences: u64 = batches.iter().map(|r| r.selection_inferences).sum();
    let exhaustive: u64 = pool_size_per_batch.iter().map(|&n| n as u64).sum();
    Ok(EfficiencyReport {
        acceptance_rate: accepted as f64 / examined as f64,
        mraru_inferences,
        exhaustive_inferences_equivalent: exhaustive,
        speedup: exhaustive as f64 / mraru_inferences as f64,
    })
}

/// [`efficiency_report`] using the |U| recorded in the ledger itself.
pub fn efficiency_report_from_ledger(ledger: &RunLedger) -> Result<EfficiencyReport, MetricsError> {
    let sizes: Vec<usize> = ledger.batch_rows().map(|r| r.unlabeled_at_start).collect();
    efficiency_report(ledger, &sizes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    BalancedAccuracy,
}

impl Metric {
    pub fn of(self, row: &LedgerRow) -> Option<f64> {
        match self {
            Metric::Accuracy => row.accuracy,
            Metric::BalancedAccuracy => row.balanced_accuracy,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accuracy" => Ok(Self::Accuracy),
            "balanced_accuracy" => Ok(Self::BalancedAccuracy),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

/// Smallest `labels_spent` whose evaluated metric reaches `target`.
pub fn labels_to_threshold(ledger: &RunLedger, target: f64, metric: Metric) -> Option<usize> {
    first_reaching(
        ledger.rows.iter().map(|r| (r.labels_spent, metric.of(r))),
        target,
    )
}

pub(crate) fn first_reaching(
    rows: impl Iterator<Item = (usize, Option<f64>)>,
    target: f64,
) -> Option<usize> {
    rows.filter_map(|(labels, value)| value.filter(|v| *v >= target).map(|_| labels))
        .min()
}
