use thiserror::Error;

use super::{
    exhaustive_lc_select_batch, mraru_select_batch, random_select_batch,
    randomized_uncertainty_select_batch, SamplingError, SelectionBatch, Strategy, StrategyConfig,
};
use crate::dataset::{seed_initial_labels, DatasetError, DatasetSplit, Pool, PoolState};
use crate::metrics::{
    accuracy, balanced_accuracy, ConfusionCounts, LedgerRow, MetricsError, RowPhase, RunLedger,
    RunMeta, StopReason,
};
use crate::oracle::{OracleError, Teacher};
use crate::rng::{self, streams};
use crate::students::{
    train, LabeledData, ProbabilisticClassifier, StudentError, StudentModel, TrainConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoopSettings {
    /// Maximum size of L, seeding included.
    pub budget: usize,
    /// Evaluate after every `eval_every`-th batch; the seeding round and the
    /// last row are always evaluated.
    pub eval_every: usize,
}

impl Default for LoopSettings {
    fn default() -> Self {
        Self {
            budget: 500,
            eval_every: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("invalid loop settings: {0}")]
    InvalidSettings(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Student(#[from] StudentError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// A run that stopped on an error, with every row recorded before it.
#[derive(Debug, Error)]
#[error("run {} aborted after {} labels: {error}", ledger.meta.run_id, ledger.labels_spent())]
pub struct RunAborted {
    pub ledger: RunLedger,
    #[source]
    pub error: LoopError,
}

struct EvalSet<'a> {
    rows: Vec<&'a [f64]>,
    truth: Vec<usize>,
}

impl<'a> EvalSet<'a> {
    /// Held-out items with gold labels; unlabeled eval items are skipped.
    fn new(pool: &'a Pool, split: &DatasetSplit) -> Self {
        let (rows, truth) = split
            .eval_set
            .iter()
            .filter_map(|&i| pool.item(i).gold_label.map(|g| (pool.features(i), g)))
            .unzip();
        Self { rows, truth }
    }

    fn score(
        &self,
        model: &StudentModel,
        classes: usize,
    ) -> Result<(Option<f64>, Option<f64>), LoopError> {
        if self.rows.is_empty() {
            return Ok((None, None));
        }
        let predicted = model.predict(&self.rows)?;
        let confusion = ConfusionCounts::from_predictions(classes, &self.truth, &predicted)?;
        Ok((
            Some(accuracy(&confusion)?),
            Some(balanced_accuracy(&confusion)?),
        ))
    }
}

fn fit(config: &TrainConfig, pool: &Pool, state: &PoolState) -> Result<StudentModel, StudentError> {
    let (rows, labels): (Vec<&[f64]>, Vec<usize>) = state
        .labeled()
        .iter()
        .map(|&(i, l)| (pool.features(i), l))
        .unzip();
    train(
        config.clone(),
        &LabeledData::new(rows, labels, state.num_classes()),
    )
}

fn select(
    state: &PoolState,
    pool: &Pool,
    model: &StudentModel,
    cfg: &StrategyConfig,
    rng: &mut rng::Rng,
) -> Result<SelectionBatch, SamplingError> {
    match cfg.strategy {
        Strategy::Mraru => mraru_select_batch(state, pool, model, cfg, rng),
        Strategy::Random => random_select_batch(state, cfg, rng),
        Strategy::ExhaustiveLc => exhaustive_lc_select_batch(state, pool, model, cfg),
        Strategy::RandomizedUncertainty => {
            randomized_uncertainty_select_batch(state, pool, model, cfg, rng)
        }
    }
}

/// Runs one active-distillation cell.
///
/// Seeds L until every class is covered (drawing from the seeding stream of
/// `meta.seed`, so all strategies of a cell start from the same L), then
/// repeats select → label → retrain from scratch → evaluate until the budget
/// is spent, U is empty, or a batch accepts nothing. Selection randomness
/// comes from the selection stream of `strategy_cfg.rng_seed`.
// The partial ledger is the point of the error, and aborts are rare.
#[allow(clippy::result_large_err)]
pub fn run_active_loop(
    pool: &Pool,
    split: &DatasetSplit,
    student_cfg: &TrainConfig,
    strategy_cfg: &StrategyConfig,
    teacher: &mut Teacher,
    settings: &LoopSettings,
    meta: RunMeta,
) -> Result<RunLedger, RunAborted> {
    let mut ledger = RunLedger::new(meta, settings.budget);
    match drive(
        pool,
        split,
        student_cfg,
        strategy_cfg,
        teacher,
        settings,
        &mut ledger,
    ) {
        Ok(()) => Ok(ledger),
        Err(error) => {
            ledger.stop = Some(StopReason::Aborted {
                error: error.to_string(),
            });
            Err(RunAborted { ledger, error })
        }
    }
}

fn drive(
    pool: &Pool,
    split: &DatasetSplit,
    student_cfg: &TrainConfig,
    strategy_cfg: &StrategyConfig,
    teacher: &mut Teacher,
    settings: &LoopSettings,
    ledger: &mut RunLedger,
) -> Result<(), LoopError> {
    let classes = pool.num_classes();
    if settings.budget < classes {
        return Err(LoopError::InvalidSettings(format!(
            "budget {} is below the class count {classes}",
            settings.budget
        )));
    }
    if settings.eval_every == 0 {
        return Err(LoopError::InvalidSettings(
            "eval_every must be at least 1".into(),
        ));
    }
    if strategy_cfg.batch_size == 0 {
        return Err(SamplingError::ZeroBatch.into());
    }
    student_cfg.validate()?;

    let eval = EvalSet::new(pool, split);
    let budget = settings.budget;

    let requests_before = teacher.requests();
    let mut seeding_rng = rng::stream(ledger.meta.seed, streams::SEEDING);
    let state = PoolState::new(split.train_pool.clone(), classes);
    let mut state = seed_initial_labels(state, pool, teacher, &mut seeding_rng, Some(budget))?;
    let mut model = fit(student_cfg, pool, &state)?;
    let (acc, bal) = eval.score(&model, classes)?;
    let seeded = state.labeled().len();
    ledger.rows.push(LedgerRow {
        phase: RowPhase::Seed,
        batch: 0,
        labels_spent: seeded,
        accepted: seeded,
        candidates_examined: seeded as u64,
        selection_inferences: 0,
        oracle_calls: teacher.requests() - requests_before,
        unlabeled_at_start: split.train_pool.len(),
        accuracy: acc,
        balanced_accuracy: bal,
        acceptance_rate_to_date: None,
    });

    let mut selection_rng = rng::stream(strategy_cfg.rng_seed, streams::SELECTION);
    let (mut accepted_total, mut examined_total) = (0u64, 0u64);
    let mut batch_no = 0;
    loop {
        let labeled = state.labeled().len();
        if labeled >= budget {
            ledger.stop = Some(StopReason::BudgetReached);
            break;
        }
        if state.unlabeled().is_empty() {
            ledger.stop = Some(StopReason::PoolExhausted);
            break;
        }
        batch_no += 1;
        let cfg = StrategyConfig {
            batch_size: strategy_cfg.batch_size.min(budget - labeled),
            ..strategy_cfg.clone()
        };
        let unlabeled_at_start = state.unlabeled().len();
        let inferences_before = model.inference_count();
        let batch = select(&state, pool, &model, &cfg, &mut selection_rng)?;
        let selection_inferences = model.inference_count() - inferences_before;
        if batch.accepted.is_empty() {
            ledger.stop = Some(StopReason::SelectionExhausted {
                candidates_examined: batch.candidates_examined,
                selection_inferences,
            });
            break;
        }

        let requests_before = teacher.requests();
        let labels = teacher.label_batch(&batch.accepted, pool)?;
        for (&item, (_, label)) in batch.accepted.iter().zip(&labels) {
            state.assign(item, *label);
        }
        let oracle_calls = teacher.requests() - requests_before;
        model = fit(student_cfg, pool, &state)?;

        accepted_total += batch.accepted.len() as u64;
        examined_total += batch.candidates_examined;
        let last = state.labeled().len() >= budget || state.unlabeled().is_empty();
        let (acc, bal) = if last || batch_no % settings.eval_every == 0 {
            eval.score(&model, classes)?
        } else {
            (None, None)
        };
        ledger.rows.push(LedgerRow {
            phase: RowPhase::Batch,
            batch: batch_no,
            labels_spent: state.labeled().len(),
            accepted: batch.accepted.len(),
            candidates_examined: batch.candidates_examined,
            selection_inferences,
            oracle_calls,
            unlabeled_at_start,
            accuracy: acc,
            balanced_accuracy: bal,
            acceptance_rate_to_date: Some(accepted_total as f64 / examined_total as f64),
        });
    }

    // A run cut short by an empty batch may end on an unevaluated row.
    if let Some(row) = ledger.rows.last_mut() {
        if row.accuracy.is_none() {
            let (acc, bal) = eval.score(&model, classes)?;
            row.accuracy = acc;
            row.balanced_accuracy = bal;
        }
    }
    Ok(())
}
