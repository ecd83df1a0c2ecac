//! Query strategies and the batched selection loop.
//!
//! All strategies read U from a [`PoolState`] without modifying it; the loop in
//! [`run_active_loop`] moves accepted items into L after the teacher labels them.

mod active_loop;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Pool, PoolState};
use crate::rng::Rng;
use crate::students::{ProbabilisticClassifier, ProbabilityVector, StudentError};

pub use active_loop::{run_active_loop, LoopError, LoopSettings, RunAborted};

/// Visit budget per batch is `VISIT_BUDGET_FACTOR * batch_size * K` trials.
pub const VISIT_BUDGET_FACTOR: usize = 50;

pub const DEFAULT_BATCH_SIZE: usize = 25;

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("unlabeled pool is empty")]
    EmptyPool,
    #[error("every unlabeled item has zero uncertainty")]
    ZeroUncertainty,
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error(transparent)]
    Student(#[from] StudentError),
}

/// Least-confidence uncertainty `1 - max_k p_k`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct UncertaintyScore(f64);

impl UncertaintyScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn uncertainty_lc(p: &ProbabilityVector) -> UncertaintyScore {
    UncertaintyScore(1.0 - p.max())
}

/// Probability that a drawn candidate is accepted for labeling. Identical to
/// its least-confidence uncertainty.
pub fn accept_probability(p: &ProbabilityVector) -> f64 {
    uncertainty_lc(p).value()
}

/// One accept/reject trial: true with probability `accept_prob`.
pub fn accept_trial(accept_prob: f64, rng: &mut Rng) -> bool {
    rng.random::<f64>() < accept_prob
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Mraru,
    Random,
    ExhaustiveLc,
    RandomizedUncertainty,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Mraru => "mraru",
            Strategy::Random => "random",
            Strategy::ExhaustiveLc => "exhaustive_lc",
            Strategy::RandomizedUncertainty => "randomized_uncertainty",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mraru" => Ok(Self::Mraru),
            "random" => Ok(Self::Random),
            "exhaustive_lc" => Ok(Self::ExhaustiveLc),
            "randomized_uncertainty" => Ok(Self::RandomizedUncertainty),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

/// What happens to a candidate M-RARU rejects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectedPolicy {
    /// Stays drawable, including later in the same batch.
    #[default]
    ReturnToPool,
    /// Not redrawn for the rest of the current batch.
    DeferRound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub strategy: Strategy,
    pub batch_size: usize,
    pub rng_seed: u64,
    pub rejected_policy: RejectedPolicy,
}

impl StrategyConfig {
    pub fn new(strategy: Strategy, rng_seed: u64) -> Self {
        Self {
            strategy,
            batch_size: DEFAULT_BATCH_SIZE,
            rng_seed,
            rejected_policy: RejectedPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SelectionBatch {
    /// Pool indices of accepted items, in acceptance order.
    pub accepted: Vec<usize>,
    /// Accept/reject trials (or items drawn, for non-rejecting strategies).
    pub candidates_examined: u64,
    pub student_inferences: u64,
    /// Fewer than `batch_size` items were accepted.
    pub exhausted: bool,
}

impl SelectionBatch {
    pub fn accepted_ids<'p>(&self, pool: &'p Pool) -> Vec<&'p str> {
        self.accepted
            .iter()
            .map(|&i| pool.item(i).id.as_str())
            .collect()
    }
}

fn score_one(
    model: &dyn ProbabilisticClassifier,
    pool: &Pool,
    item: usize,
) -> Result<ProbabilityVector, SamplingError> {
    Ok(model
        .predict_proba(&[pool.features(item)])?
        .pop()
        .expect("one row in, one posterior out"))
}

fn score_all(
    model: &dyn ProbabilisticClassifier,
    pool: &Pool,
    items: &[usize],
) -> Result<Vec<f64>, SamplingError> {
    let rows: Vec<&[f64]> = items.iter().map(|&i| pool.features(i)).collect();
    Ok(model
        .predict_proba(&rows)?
        .iter()
        .map(|p| uncertainty_lc(p).value())
        .collect())
}

/// Randomized accept/reject uncertainty sampling.
///
/// Draws a uniform candidate from U, scores it (one inference), and accepts it
/// with probability `1 - max_k Pr(k | x)`, until `batch_size` items are
/// accepted or `VISIT_BUDGET_FACTOR * batch_size * K` trials have been spent.
pub fn mraru_select_batch(
    state: &PoolState,
    pool: &Pool,
    model: &dyn ProbabilisticClassifier,
    cfg: &StrategyConfig,
    rng: &mut Rng,
) -> Result<SelectionBatch, SamplingError> {
    if cfg.batch_size == 0 {
        return Err(SamplingError::ZeroBatch);
    }
    if state.unlabeled().is_empty() {
        return Err(SamplingError::EmptyPool);
    }
    let visit_budget = (VISIT_BUDGET_FACTOR * cfg.batch_size * state.num_classes()) as u64;
    let mut candidates = state.unlabeled().to_vec();
    let mut batch = SelectionBatch::default();
    while batch.accepted.len() < cfg.batch_size
        && batch.candidates_examined < visit_budget
        && !candidates.is_empty()
    {
        let pos = rng.random_range(0..candidates.len());
        let item = candidates[pos];
        let p = accept_probability(&score_one(model, pool, item)?);
        batch.candidates_examined += 1;
        batch.student_inferences += 1;
        if accept_trial(p, rng) {
            batch.accepted.push(item);
            candidates.swap_remove(pos);
        } else if cfg.rejected_policy == RejectedPolicy::DeferRound {
            candidates.swap_remove(pos);
        }
    }
    batch.exhausted = batch.accepted.len() < cfg.batch_size;
    Ok(batch)
}

/// Uniform sampling without replacement; never consults the student.
pub fn random_select_batch(
    state: &PoolState,
    cfg: &StrategyConfig,
    rng: &mut Rng,
) -> Result<SelectionBatch, SamplingError> {
    if cfg.batch_size == 0 {
        return Err(SamplingError::ZeroBatch);
    }
    let unlabeled = state.unlabeled();
    if unlabeled.is_empty() {
        return Err(SamplingError::EmptyPool);
    }
    let take = cfg.batch_size.min(unlabeled.len());
    let accepted: Vec<usize> = rand::seq::index::sample(rng, unlabeled.len(), take)
        .into_iter()
        .map(|pos| unlabeled[pos])
        .collect();
    Ok(SelectionBatch {
        candidates_examined: accepted.len() as u64,
        exhausted: accepted.len() < cfg.batch_size,
        accepted,
        student_inferences: 0,
    })
}

/// Scores all of U and keeps the `batch_size` most uncertain items; ties go to
/// the lexicographically lowest id.
pub fn exhaustive_lc_select_batch(
    state: &PoolState,
    pool: &Pool,
    model: &dyn ProbabilisticClassifier,
    cfg: &StrategyConfig,
) -> Result<SelectionBatch, SamplingError> {
    if cfg.batch_size == 0 {
        return Err(SamplingError::ZeroBatch);
    }
    let unlabeled = state.unlabeled();
    if unlabeled.is_empty() {
        return Err(SamplingError::EmptyPool);
    }
    let scores = score_all(model, pool, unlabeled)?;
    let mut ranked: Vec<(f64, usize)> = scores.into_iter().zip(unlabeled.iter().copied()).collect();
    let take = cfg.batch_size.min(ranked.len());
    let by_rank = |a: &(f64, usize), b: &(f64, usize)| {
        b.0.total_cmp(&a.0)
            .then_with(|| pool.item(a.1).id.cmp(&pool.item(b.1).id))
    };
    if take < ranked.len() {
        ranked.select_nth_unstable_by(take, by_rank);
        ranked.truncate(take);
    }
    ranked.sort_by(by_rank);
    Ok(SelectionBatch {
        accepted: ranked.into_iter().map(|(_, i)| i).collect(),
        candidates_examined: unlabeled.len() as u64,
        student_inferences: unlabeled.len() as u64,
        exhausted: take < cfg.batch_size,
    })
}

/// Draws an index with probability `weights[i] / sum(weights)`.
fn draw_proportional(weights: &[f64], rng: &mut Rng) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    // Also rejects a NaN total.
    if total.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = Some(i);
            if target < acc {
                return Some(i);
            }
        }
    }
    last_positive
}

/// Picks one item of U with probability proportional to its uncertainty.
/// Scores all of U.
pub fn randomized_uncertainty_select(
    state: &PoolState,
    pool: &Pool,
    model: &dyn ProbabilisticClassifier,
    rng: &mut Rng,
) -> Result<usize, SamplingError> {
    let unlabeled = state.unlabeled();
    if unlabeled.is_empty() {
        return Err(SamplingError::EmptyPool);
    }
    let scores = score_all(model, pool, unlabeled)?;
    draw_proportional(&scores, rng)
        .map(|pos| unlabeled[pos])
        .ok_or(SamplingError::ZeroUncertainty)
}

/// Batch form of [`randomized_uncertainty_select`]: one scoring pass over U,
/// then successive proportional draws without replacement. Stops early if the
/// remaining items all have zero uncertainty.
pub fn randomized_uncertainty_select_batch(
    state: &PoolState,
    pool: &Pool,
    model: &dyn ProbabilisticClassifier,
    cfg: &StrategyConfig,
    rng: &mut Rng,
) -> Result<SelectionBatch, SamplingError> {
    if cfg.batch_size == 0 {
        return Err(SamplingError::ZeroBatch);
    }
    let unlabeled = state.unlabeled();
    if unlabeled.is_empty() {
        return Err(SamplingError::EmptyPool);
    }
    let mut weights = score_all(model, pool, unlabeled)?;
    let total: f64 = weights.iter().sum();
    if total.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(SamplingError::ZeroUncertainty);
    }
    let mut accepted = Vec::new();
    while accepted.len() < cfg.batch_size {
        let Some(pos) = draw_proportional(&weights, rng) else {
            break;
        };
        weights[pos] = 0.0;
        accepted.push(unlabeled[pos]);
    }
    Ok(SelectionBatch {
        candidates_examined: accepted.len() as u64,
        exhausted: accepted.len() < cfg.batch_size,
        accepted,
        student_inferences: unlabeled.len() as u64,
    })
}
