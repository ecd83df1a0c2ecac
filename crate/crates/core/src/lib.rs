//! Active knowledge distillation.
//!
//! A teacher oracle (an LLM behind a chat-completions endpoint, or a replay of
//! gold labels) labels only the items a cheap probabilistic student asks for.
//! Items are chosen by randomized accept/reject uncertainty sampling
//! ([`sampling::mraru_select_batch`]): draw a random unlabeled candidate, score
//! it with the current student, and accept it with probability
//! `1 - max_k Pr(k | x)`. Random, exhaustive least-confidence and
//! normalized randomized-uncertainty strategies are provided as baselines.
//!
//! Module map:
//!
//! - [`dataset`]: embedded pools, synthetic blobs, splits, labeled/unlabeled bookkeeping
//! - [`students`]: logistic regression, LDA and random forest behind one interface
//! - [`sampling`]: query strategies and the batched selection loop
//! - [`oracle`]: replay and chat-completions teachers with a persistent label cache
//! - [`metrics`]: accuracy, balanced accuracy, run ledgers, curves and efficiency
//! - [`harness`]: config-driven experiment runner behind the `akd` CLI

pub mod dataset;
#[doc(hidden)]
pub mod fuzzing;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod sampling;
pub mod students;

pub use dataset::{ClassCatalog, DatasetSplit, EmbeddedItem, Pool, PoolState};
pub use metrics::{ConfusionCounts, EfficiencyReport, LedgerRow, RunLedger};
pub use oracle::Teacher;
pub use sampling::{SelectionBatch, Strategy, StrategyConfig};
pub use students::{
    ProbabilisticClassifier, ProbabilityVector, StudentKind, StudentModel, TrainConfig,
};
