//! Probabilistic student classifiers behind one train / predict-probabilities
//! interface.
//!
//! Every fitted student counts the items it scores. The count is what the
//! sampling-efficiency accounting bills, so it is the one piece of mutable
//! state a fitted model carries (an atomic, so prediction stays `&self`).

mod forest;
mod lda;
mod logistic;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forest::{DecisionTree, ForestConfig, Node, RandomForest};
pub use lda::{LdaConfig, LdaModel};
pub use logistic::{logistic_gradient, LogisticConfig, LogisticGradient, LogisticModel};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum StudentError {
    #[error("model is not fitted")]
    NotFitted,
    #[error("training data is empty")]
    EmptyData,
    #[error("training data has a single class")]
    SingleClass,
    #[error("non-finite feature value in row {0}")]
    NonFinite(usize),
    #[error("expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("model document: {0}")]
    Format(String),
}

/// Class posteriors `Pr(k | x)` for one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(probs: Vec<f64>) -> Result<Self, StudentError> {
        if probs.len() < 2 {
            return Err(StudentError::InvalidProbabilities(format!(
                "length {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(StudentError::InvalidProbabilities(format!(
                "entry {p} outside [0, 1]"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(StudentError::InvalidProbabilities(format!("sum {sum}")));
        }
        Ok(Self(probs))
    }

    /// Numerically stable softmax. Scores of `-inf` get probability zero; at
    /// least one score must be finite.
    pub fn softmax(scores: &[f64]) -> Self {
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        debug_assert!(max.is_finite());
        let mut probs: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Self(probs)
    }

    /// Exact vote fractions `votes[k] / total`.
    pub fn from_votes(votes: &[u32]) -> Self {
        let total: u32 = votes.iter().sum();
        Self(
            votes
                .iter()
                .map(|&v| f64::from(v) / f64::from(total))
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// Most probable class; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = StudentError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Self {
        p.0
    }
}

/// Index of the largest value, lowest index on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Anything that scores items with class posteriors.
///
/// Implemented by [`StudentModel`]; test doubles implement it directly.
pub trait ProbabilisticClassifier: Send + Sync {
    fn num_classes(&self) -> usize;

    /// Scores `rows`, adding `rows.len()` to the inference count on success.
    fn predict_proba(&self, rows: &[&[f64]]) -> Result<Vec<ProbabilityVector>, StudentError>;

    fn inference_count(&self) -> u64;

    fn predict(&self, rows: &[&[f64]]) -> Result<Vec<usize>, StudentError> {
        Ok(self
            .predict_proba(rows)?
            .iter()
            .map(ProbabilityVector::argmax)
            .collect())
    }
}

/// Labeled training examples; `num_classes` fixes the posterior length even
/// when some classes are absent from `labels`.
#[derive(Debug, Clone)]
pub struct LabeledData<'a> {
    pub rows: Vec<&'a [f64]>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl<'a> LabeledData<'a> {
    pub fn new(rows: Vec<&'a [f64]>, labels: Vec<usize>, num_classes: usize) -> Self {
        assert_eq!(rows.len(), labels.len(), "rows and labels differ in length");
        Self {
            rows,
            labels,
            num_classes,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.rows.first().map(|r| r.len())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Checks the training preconditions and returns the feature dimension.
    pub fn validate(&self) -> Result<usize, StudentError> {
        let dim = self.dim().ok_or(StudentError::EmptyData)?;
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != dim {
                return Err(StudentError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(StudentError::NonFinite(i));
            }
        }
        if let Some(&label) = self.labels.iter().find(|&&l| l >= self.num_classes) {
            return Err(StudentError::LabelOutOfRange {
                label,
                classes: self.num_classes,
            });
        }
        if self.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
            return Err(StudentError::SingleClass);
        }
        Ok(dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudentKind {
    Logistic,
    Lda,
    RandomForest,
}

impl StudentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StudentKind::Logistic => "logistic",
            StudentKind::Lda => "lda",
            StudentKind::RandomForest => "random_forest",
        }
    }
}

impl std::fmt::Display for StudentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StudentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logistic" => Ok(Self::Logistic),
            "lda" => Ok(Self::Lda),
            "random_forest" => Ok(Self::RandomForest),
            other => Err(format!("unknown student kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrainConfig {
    Logistic(LogisticConfig),
    Lda(LdaConfig),
    RandomForest(ForestConfig),
}

impl TrainConfig {
    pub fn default_for(kind: StudentKind) -> Self {
        match kind {
            StudentKind::Logistic => Self::Logistic(LogisticConfig::default()),
            StudentKind::Lda => Self::Lda(LdaConfig::default()),
            StudentKind::RandomForest => Self::RandomForest(ForestConfig::default()),
        }
    }

    pub fn kind(&self) -> StudentKind {
        match self {
            Self::Logistic(_) => StudentKind::Logistic,
            Self::Lda(_) => StudentKind::Lda,
            Self::RandomForest(_) => StudentKind::RandomForest,
        }
    }

    pub fn validate(&self) -> Result<(), StudentError> {
        match self {
            Self::Logistic(c) => c.validate(),
            Self::Lda(c) => c.validate(),
            Self::RandomForest(c) => c.validate(),
        }
    }

    /// Replaces the stochastic seed, where the student has one.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let Self::RandomForest(c) = &mut self {
            c.seed = seed;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum FittedParams {
    Logistic(LogisticModel),
    Lda(LdaModel),
    RandomForest(RandomForest),
}

/// A student of one kind, possibly not yet fitted.
#[derive(Debug)]
pub struct StudentModel {
    config: TrainConfig,
    params: Option<FittedParams>,
    inferences: AtomicU64,
}

impl StudentModel {
    pub fn new(config: TrainConfig) -> Result<Self, StudentError> {
        config.validate()?;
        Ok(Self {
            config,
            params: None,
            inferences: AtomicU64::new(0),
        })
    }

    pub fn kind(&self) -> StudentKind {
        self.config.kind()
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn is_fitted(&self) -> bool {
        self.params.is_some()
    }

    /// Fits from scratch, discarding any previous parameters. The inference
    /// count carries over.
    pub fn fit(&mut self, data: &LabeledData<'_>) -> Result<(), StudentError> {
        let params = match &self.config {
            TrainConfig::Logistic(c) => FittedParams::Logistic(LogisticModel::fit(data, c)?),
            TrainConfig::Lda(c) => FittedParams::Lda(LdaModel::fit(data, c)?),
            TrainConfig::RandomForest(c) => FittedParams::RandomForest(RandomForest::fit(data, c)?),
        };
        self.params = Some(params);
        Ok(())
    }

    pub fn as_logistic(&self) -> Option<&LogisticModel> {
        match &self.params {
            Some(FittedParams::Logistic(m)) => Some(m),
            _ => None,
        }
    }

    pub fn as_lda(&self) -> Option<&LdaModel> {
        match &self.params {
            Some(FittedParams::Lda(m)) => Some(m),
            _ => None,
        }
    }

    pub fn as_forest(&self) -> Option<&RandomForest> {
        match &self.params {
            Some(FittedParams::RandomForest(m)) => Some(m),
            _ => None,
        }
    }

    pub fn from_logistic(
        config: LogisticConfig,
        model: LogisticModel,
    ) -> Result<Self, StudentError> {
        Self::with_params(TrainConfig::Logistic(config), FittedParams::Logistic(model))
    }

    pub fn from_forest(config: ForestConfig, model: RandomForest) -> Result<Self, StudentError> {
        Self::with_params(
            TrainConfig::RandomForest(config),
            FittedParams::RandomForest(model),
        )
    }

    fn with_params(config: TrainConfig, params: FittedParams) -> Result<Self, StudentError> {
        let mut m = Self::new(config)?;
        m.params = Some(params);
        Ok(m)
    }

    /// Self-describing JSON document: format version, kind, hyperparameters
    /// and fitted parameters.
    pub fn to_document(&self) -> Result<String, StudentError> {
        let doc = ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            config: self.config.clone(),
            params: self.params.clone(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| StudentError::Format(e.to_string()))
    }

    pub fn from_document(text: &str) -> Result<Self, StudentError> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| StudentError::Format(e.to_string()))?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(StudentError::Format(format!(
                "unsupported format_version {}",
                doc.format_version
            )));
        }
        doc.config.validate()?;
        if let Some(params) = &doc.params {
            let params_kind = match params {
                FittedParams::Logistic(m) => {
                    m.check()?;
                    StudentKind::Logistic
                }
                FittedParams::Lda(m) => {
                    m.check()?;
                    StudentKind::Lda
                }
                FittedParams::RandomForest(m) => {
                    m.check()?;
                    StudentKind::RandomForest
                }
            };
            if params_kind != doc.config.kind() {
                return Err(StudentError::Format(format!(
                    "config kind {} does not match params kind {params_kind}",
                    doc.config.kind()
                )));
            }
        }
        Ok(Self {
            config: doc.config,
            params: doc.params,
            inferences: AtomicU64::new(0),
        })
    }
}

impl ProbabilisticClassifier for StudentModel {
    fn num_classes(&self) -> usize {
        match &self.params {
            Some(FittedParams::Logistic(m)) => m.num_classes(),
            Some(FittedParams::Lda(m)) => m.num_classes(),
            Some(FittedParams::RandomForest(m)) => m.num_classes(),
            None => 0,
        }
    }

    fn predict_proba(&self, rows: &[&[f64]]) -> Result<Vec<ProbabilityVector>, StudentError> {
        let out = match self.params.as_ref().ok_or(StudentError::NotFitted)? {
            FittedParams::Logistic(m) => m.predict_proba(rows)?,
            FittedParams::Lda(m) => m.predict_proba(rows)?,
            FittedParams::RandomForest(m) => m.predict_proba(rows)?,
        };
        self.inferences
            .fetch_add(rows.len() as u64, Ordering::Relaxed);
        Ok(out)
    }

    fn inference_count(&self) -> u64 {
        self.inferences.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    format_version: u32,
    config: TrainConfig,
    params: Option<FittedParams>,
}

/// Fits a fresh student of `config`'s kind.
pub fn train(config: TrainConfig, data: &LabeledData<'_>) -> Result<StudentModel, StudentError> {
    let mut model = StudentModel::new(config)?;
    model.fit(data)?;
    Ok(model)
}

pub(crate) fn check_rows(rows: &[&[f64]], dim: usize) -> Result<(), StudentError> {
    for row in rows {
        if row.len() != dim {
            return Err(StudentError::DimensionMismatch {
                expected: dim,
                found: row.len(),
            });
        }
    }
    Ok(())
}
