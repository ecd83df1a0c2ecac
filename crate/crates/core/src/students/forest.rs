//! Random forest of Gini CART trees on bootstrap samples.
//!
//! Each tree casts one vote (its leaf's majority class, lowest index on ties);
//! posteriors are exact vote fractions over `n_trees`.

use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, check_rows, LabeledData, ProbabilityVector, StudentError};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of features considered per split; `None` means `sqrt(d) / d`.
    pub feature_subsample: Option<f64>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 2,
            feature_subsample: None,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<(), StudentError> {
        if self.n_trees == 0 || self.max_depth == 0 || self.min_leaf == 0 {
            return Err(StudentError::InvalidConfig(
                "n_trees, max_depth and min_leaf must be positive".into(),
            ));
        }
        if self.n_trees > u32::MAX as usize {
            return Err(StudentError::InvalidConfig("n_trees too large".into()));
        }
        if let Some(f) = self.feature_subsample {
            if !(f > 0.0 && f <= 1.0) {
                return Err(StudentError::InvalidConfig(format!(
                    "feature_subsample {f} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }

    fn features_per_split(&self, dim: usize) -> usize {
        let fraction = self
            .feature_subsample
            .unwrap_or_else(|| (dim as f64).sqrt() / dim as f64);
        ((fraction * dim as f64).round() as usize).clamp(1, dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        class: usize,
    },
    /// Goes left when `x[feature] <= threshold`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in preorder; the root is node 0 and children always follow their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf(class: usize) -> Self {
        Self {
            nodes: vec![Node::Leaf { class }],
        }
    }

    pub fn vote(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    fn check(&self, classes: usize, dim: usize) -> Result<(), StudentError> {
        if self.nodes.is_empty() {
            return Err(StudentError::Format("empty tree".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let ok = match *node {
                Node::Leaf { class } => class < classes,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    feature < dim
                        && threshold.is_finite()
                        && left > i
                        && right > i
                        && left < self.nodes.len()
                        && right < self.nodes.len()
                }
            };
            if !ok {
                return Err(StudentError::Format(format!("invalid tree node {i}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomForest {
    pub classes: usize,
    pub dim: usize,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn from_trees(
        classes: usize,
        dim: usize,
        trees: Vec<DecisionTree>,
    ) -> Result<Self, StudentError> {
        let forest = Self {
            classes,
            dim,
            trees,
        };
        forest.check()?;
        Ok(forest)
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }

    pub fn fit(data: &LabeledData<'_>, config: &ForestConfig) -> Result<Self, StudentError> {
        config.validate()?;
        let dim = data.validate()?;
        let builder = TreeBuilder {
            data,
            classes: data.num_classes,
            max_depth: config.max_depth,
            min_leaf: config.min_leaf,
            mtry: config.features_per_split(dim),
        };
        let trees = (0..config.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::stream(config.seed, 1_000 + t as u64);
                let n = data.len();
                let bootstrap: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
                builder.build(bootstrap, &mut r)
            })
            .collect();
        Ok(Self {
            classes: data.num_classes,
            dim,
            trees,
        })
    }

    pub fn votes(&self, row: &[f64]) -> Vec<u32> {
        let mut votes = vec![0u32; self.classes];
        for tree in &self.trees {
            votes[tree.vote(row)] += 1;
        }
        votes
    }

    pub fn predict_proba(&self, rows: &[&[f64]]) -> Result<Vec<ProbabilityVector>, StudentError> {
        check_rows(rows, self.dim)?;
        Ok(rows
            .iter()
            .map(|row| ProbabilityVector::from_votes(&self.votes(row)))
            .collect())
    }

    pub(crate) fn check(&self) -> Result<(), StudentError> {
        if self.classes < 2
            || self.dim == 0
            || self.trees.is_empty()
            || self.trees.len() > u32::MAX as usize
        {
            return Err(StudentError::Format(
                "forest needs classes >= 2, dim >= 1 and trees".into(),
            ));
        }
        self.trees
            .iter()
            .try_for_each(|t| t.check(self.classes, self.dim))
    }
}

struct TreeBuilder<'d, 'a> {
    data: &'d LabeledData<'a>,
    classes: usize,
    max_depth: usize,
    min_leaf: usize,
    mtry: usize,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl TreeBuilder<'_, '_> {
    fn build(&self, samples: Vec<usize>, r: &mut rng::Rng) -> DecisionTree {
        let mut nodes = Vec::new();
        self.grow(samples, 0, r, &mut nodes);
        DecisionTree { nodes }
    }

    fn counts(&self, samples: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.classes];
        for &s in samples {
            counts[self.data.labels[s]] += 1.0;
        }
        counts
    }

    fn grow(
        &self,
        samples: Vec<usize>,
        depth: usize,
        r: &mut rng::Rng,
        nodes: &mut Vec<Node>,
    ) -> usize {
        let id = nodes.len();
        let counts = self.counts(&samples);
        let majority = argmax(&counts);
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        nodes.push(Node::Leaf { class: majority });
        if pure || depth >= self.max_depth || samples.len() < 2 * self.min_leaf {
            return id;
        }
        let Some(best) = self.best_split(&samples, &counts, r) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&s| self.data.rows[s][best.feature] <= best.threshold);
        let left = self.grow(left, depth + 1, r, nodes);
        let right = self.grow(right, depth + 1, r, nodes);
        nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&self, samples: &[usize], counts: &[f64], r: &mut rng::Rng) -> Option<BestSplit> {
        let dim = self.data.rows[0].len();
        let n = samples.len() as f64;
        let parent = gini(counts, n);
        let mut best: Option<BestSplit> = None;
        let mut order = samples.to_vec();
        for feature in sample(r, dim, self.mtry) {
            let value = |s: usize| self.data.rows[s][feature];
            order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
            let mut left = vec![0.0; self.classes];
            let mut right = counts.to_vec();
            for i in 0..order.len() - 1 {
                let label = self.data.labels[order[i]];
                left[label] += 1.0;
                right[label] -= 1.0;
                let (lo, hi) = (value(order[i]), value(order[i + 1]));
                let n_left = i + 1;
                if lo == hi || n_left < self.min_leaf || order.len() - n_left < self.min_leaf {
                    continue;
                }
                let nl = n_left as f64;
                let impurity = (nl * gini(&left, nl) + (n - nl) * gini(&right, n - nl)) / n;
                if impurity < parent - 1e-12 && best.as_ref().is_none_or(|b| impurity < b.impurity)
                {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }
}

fn gini(counts: &[f64], n: f64) -> f64 {
    1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>()
}
