//! Embedded classification pools and the labeled/unlabeled bookkeeping of a run.

mod io;
mod split;
mod synthetic;

use std::collections::HashMap;

use rand::Rng as _;
use thiserror::Error;

use crate::oracle::{OracleError, Teacher};
use crate::rng::Rng;

pub use io::{load_pool, parse_pool, serialize_pool, write_pool};
pub use split::{split, DatasetSplit};
pub use synthetic::{generate_synthetic, SyntheticSpec};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("item {id:?}: expected {expected} features, found {found}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("item {id:?}: non-finite feature value")]
    NonFinite { id: String },
    #[error("duplicate item id {0:?}")]
    DuplicateId(String),
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("item {id:?}: label index {label} out of range for {classes} classes")]
    LabelOutOfRange {
        id: String,
        label: usize,
        classes: usize,
    },
    #[error("invalid class catalog: {0}")]
    InvalidCatalog(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("eval fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("class coverage failed: {covered} of {classes} classes after {drawn} draws")]
    CoverageFailure {
        covered: usize,
        classes: usize,
        drawn: usize,
    },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// One corpus element.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedItem {
    pub id: String,
    pub features: Vec<f64>,
    pub text: Option<String>,
    /// Hidden gold label, an index into the pool's catalog.
    pub gold_label: Option<usize>,
}

/// Ordered list of class names; index `k` is class `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCatalog {
    names: Vec<String>,
}

impl ClassCatalog {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, DatasetError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(DatasetError::InvalidCatalog(format!(
                "need at least 2 classes, got {}",
                names.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(DatasetError::InvalidCatalog(format!(
                    "class {i} has an empty name"
                )));
            }
            if names[..i].contains(name) {
                return Err(DatasetError::InvalidCatalog(format!(
                    "duplicate class name {name:?}"
                )));
            }
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, class: usize) -> Option<&str> {
        self.names.get(class).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// A validated pool: items share one dimension, ids are unique and gold labels
/// index into the catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    dim: usize,
    catalog: ClassCatalog,
    items: Vec<EmbeddedItem>,
    index: HashMap<String, usize>,
}

impl Pool {
    pub fn new(
        dim: usize,
        catalog: ClassCatalog,
        items: Vec<EmbeddedItem>,
    ) -> Result<Self, DatasetError> {
        let mut index = HashMap::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            if item.features.len() != dim {
                return Err(DatasetError::DimensionMismatch {
                    id: item.id.clone(),
                    expected: dim,
                    found: item.features.len(),
                });
            }
            if item.features.iter().any(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite {
                    id: item.id.clone(),
                });
            }
            if let Some(label) = item.gold_label {
                if label >= catalog.len() {
                    return Err(DatasetError::LabelOutOfRange {
                        id: item.id.clone(),
                        label,
                        classes: catalog.len(),
                    });
                }
            }
            if index.insert(item.id.clone(), i).is_some() {
                return Err(DatasetError::DuplicateId(item.id.clone()));
            }
        }
        Ok(Self {
            dim,
            catalog,
            items,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn catalog(&self) -> &ClassCatalog {
        &self.catalog
    }

    pub fn num_classes(&self) -> usize {
        self.catalog.len()
    }

    pub fn items(&self) -> &[EmbeddedItem] {
        &self.items
    }

    pub fn item(&self, index: usize) -> &EmbeddedItem {
        &self.items[index]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn features(&self, index: usize) -> &[f64] {
        &self.items[index].features
    }

    /// Number of items carrying each gold label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.catalog.len()];
        for label in self.items.iter().filter_map(|it| it.gold_label) {
            counts[label] += 1;
        }
        counts
    }

    pub fn into_parts(self) -> (Vec<EmbeddedItem>, ClassCatalog) {
        (self.items, self.catalog)
    }
}

/// The evolving labeled set L and unlabeled pool U of a run, as indices into a
/// [`Pool`].
///
/// Items leave U only by entering L, so `|L| + |U|` is constant over a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolState {
    labeled: Vec<(usize, usize)>,
    unlabeled: Vec<usize>,
    num_classes: usize,
}

impl PoolState {
    pub fn new(unlabeled: Vec<usize>, num_classes: usize) -> Self {
        Self {
            labeled: Vec::new(),
            unlabeled,
            num_classes,
        }
    }

    /// (item index, assigned label) pairs in labeling order.
    pub fn labeled(&self) -> &[(usize, usize)] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn total(&self) -> usize {
        self.labeled.len() + self.unlabeled.len()
    }

    /// Moves `item` from U to L with `label`.
    ///
    /// # Panics
    /// If `item` is not in U or `label` is out of range; both are caller bugs.
    pub fn assign(&mut self, item: usize, label: usize) {
        assert!(label < self.num_classes, "label {label} out of range");
        let pos = self
            .unlabeled
            .iter()
            .position(|&u| u == item)
            .unwrap_or_else(|| panic!("item {item} is not unlabeled"));
        self.unlabeled.swap_remove(pos);
        self.labeled.push((item, label));
    }

    /// Distinct classes present in L.
    pub fn covered_classes(&self) -> usize {
        let mut seen = vec![false; self.num_classes];
        for &(_, label) in &self.labeled {
            seen[label] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    /// Checks the disjointness and label-range invariants.
    pub fn check(&self, pool_len: usize) -> bool {
        let mut seen = vec![false; pool_len];
        let ids = self
            .labeled
            .iter()
            .map(|&(i, _)| i)
            .chain(self.unlabeled.iter().copied());
        for i in ids {
            if i >= pool_len || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        self.labeled.iter().all(|&(_, l)| l < self.num_classes)
    }
}

/// Draws uniformly without replacement from U, labeling each draw with the
/// teacher, until every class appears in L.
///
/// `max_labels` caps the total size of L; hitting the cap (or emptying U)
/// before all classes are covered is a [`DatasetError::CoverageFailure`].
pub fn seed_initial_labels(
    mut state: PoolState,
    pool: &Pool,
    teacher: &mut Teacher,
    rng: &mut Rng,
    max_labels: Option<usize>,
) -> Result<PoolState, DatasetError> {
    let classes = state.num_classes();
    let mut drawn = 0;
    while state.covered_classes() < classes {
        let capped = max_labels.is_some_and(|cap| state.labeled().len() >= cap);
        if state.unlabeled.is_empty() || capped {
            return Err(DatasetError::CoverageFailure {
                covered: state.covered_classes(),
                classes,
                drawn,
            });
        }
        let pick = state.unlabeled[rng.random_range(0..state.unlabeled.len())];
        let labels = teacher.label_batch(&[pick], pool)?;
        state.assign(pick, labels[0].1);
        drawn += 1;
    }
    Ok(state)
}
