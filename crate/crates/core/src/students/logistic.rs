//! Multinomial logistic regression trained by full-batch gradient descent on
//!
//! ```text
//! J(W, b) = (1/n) * sum_i -ln softmax(W x_i + b)[y_i] + l2 * ||W||^2
//! ```
//!
//! The bias is not penalized.

use serde::{Deserialize, Serialize};

use super::{check_rows, LabeledData, ProbabilityVector, StudentError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub max_epochs: usize,
    pub convergence_tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            l2_penalty: 1e-4,
            max_epochs: 500,
            convergence_tol: 1e-6,
        }
    }
}

impl LogisticConfig {
    pub fn validate(&self) -> Result<(), StudentError> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("l2_penalty", self.l2_penalty),
            ("convergence_tol", self.convergence_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(StudentError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.max_epochs == 0 {
            return Err(StudentError::InvalidConfig(
                "max_epochs must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Weights are row-major `classes x dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticModel {
    pub classes: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LogisticGradient {
    pub fn norm(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.bias)
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

impl LogisticModel {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            classes,
            dim,
            weights: vec![0.0; classes * dim],
            bias: vec![0.0; classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }

    pub fn fit(data: &LabeledData<'_>, config: &LogisticConfig) -> Result<Self, StudentError> {
        config.validate()?;
        let dim = data.validate()?;
        let mut model = Self::zeros(data.num_classes, dim);
        for _ in 0..config.max_epochs {
            let grad = logistic_gradient(&model, data, config.l2_penalty);
            if grad.norm() < config.convergence_tol {
                break;
            }
            for (w, g) in model.weights.iter_mut().zip(&grad.weights) {
                *w -= config.learning_rate * g;
            }
            for (b, g) in model.bias.iter_mut().zip(&grad.bias) {
                *b -= config.learning_rate * g;
            }
        }
        if model
            .weights
            .iter()
            .chain(&model.bias)
            .any(|v| !v.is_finite())
        {
            return Err(StudentError::Numerical("gradient descent diverged".into()));
        }
        Ok(model)
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|k| {
                let w = &self.weights[k * self.dim..(k + 1) * self.dim];
                self.bias[k] + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    pub fn predict_proba(&self, rows: &[&[f64]]) -> Result<Vec<ProbabilityVector>, StudentError> {
        check_rows(rows, self.dim)?;
        Ok(rows
            .iter()
            .map(|row| ProbabilityVector::softmax(&self.scores(row)))
            .collect())
    }

    pub(crate) fn check(&self) -> Result<(), StudentError> {
        if self.classes < 2 || self.dim == 0 {
            return Err(StudentError::Format(
                "logistic model needs classes >= 2 and dim >= 1".into(),
            ));
        }
        if Some(self.weights.len()) != self.classes.checked_mul(self.dim)
            || self.bias.len() != self.classes
        {
            return Err(StudentError::Format(
                "logistic parameter shapes do not match".into(),
            ));
        }
        if self
            .weights
            .iter()
            .chain(&self.bias)
            .any(|v| !v.is_finite())
        {
            return Err(StudentError::Format("non-finite logistic parameter".into()));
        }
        Ok(())
    }
}

/// Analytic gradient of the regularized mean cross-entropy at `model`.
///
/// With no data the gradient is the pure penalty term `2 * l2 * W` (and zero
/// for the bias).
pub fn logistic_gradient(
    model: &LogisticModel,
    data: &LabeledData<'_>,
    l2: f64,
) -> LogisticGradient {
    let (k, d) = (model.classes, model.dim);
    let mut gw: Vec<f64> = model.weights.iter().map(|w| 2.0 * l2 * w).collect();
    let mut gb = vec![0.0; k];
    if data.is_empty() {
        return LogisticGradient {
            weights: gw,
            bias: gb,
        };
    }
    let inv_n = 1.0 / data.len() as f64;
    // Softmax computed in place in one scratch buffer: this loop dominates
    // training time.
    let mut probs = vec![0.0; k];
    for (row, &label) in data.rows.iter().zip(&data.labels) {
        for (c, p) in probs.iter_mut().enumerate() {
            let w = &model.weights[c * d..(c + 1) * d];
            *p = model.bias[c] + w.iter().zip(row.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for p in probs.iter_mut() {
            *p = (*p - max).exp();
            total += *p;
        }
        for (c, &p) in probs.iter().enumerate() {
            let residual = (p / total - if c == label { 1.0 } else { 0.0 }) * inv_n;
            gb[c] += residual;
            for (g, x) in gw[c * d..(c + 1) * d].iter_mut().zip(row.iter()) {
                *g += residual * x;
            }
        }
    }
    LogisticGradient {
        weights: gw,
        bias: gb,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    /// Objective evaluated directly from its definition, independent of the
    /// softmax helper used by the model.
    fn objective(model: &LogisticModel, data: &LabeledData<'_>, l2: f64) -> f64 {
        let mut loss = 0.0;
        for (row, &y) in data.rows.iter().zip(&data.labels) {
            let scores: Vec<f64> = (0..model.classes)
                .map(|c| {
                    model.bias[c]
                        + (0..model.dim)
                            .map(|j| model.weights[c * model.dim + j] * row[j])
                            .sum::<f64>()
                })
                .collect();
            let lse = scores.iter().map(|s| s.exp()).sum::<f64>().ln();
            loss += lse - scores[y];
        }
        if !data.is_empty() {
            loss /= data.len() as f64;
        }
        loss + l2 * model.weights.iter().map(|w| w * w).sum::<f64>()
    }

    fn finite_difference(
        model: &LogisticModel,
        data: &LabeledData<'_>,
        l2: f64,
        h: f64,
    ) -> LogisticGradient {
        let probe = |set: &dyn Fn(&mut LogisticModel, f64)| {
            let mut plus = model.clone();
            set(&mut plus, h);
            let mut minus = model.clone();
            set(&mut minus, -h);
            (objective(&plus, data, l2) - objective(&minus, data, l2)) / (2.0 * h)
        };
        let weights = (0..model.weights.len())
            .map(|i| probe(&|m: &mut LogisticModel, s| m.weights[i] += s))
            .collect();
        let bias = (0..model.bias.len())
            .map(|i| probe(&|m: &mut LogisticModel, s| m.bias[i] += s))
            .collect();
        LogisticGradient { weights, bias }
    }

    fn rel_err(a: &LogisticGradient, b: &LogisticGradient) -> f64 {
        let diff: f64 = a
            .weights
            .iter()
            .chain(&a.bias)
            .zip(b.weights.iter().chain(&b.bias))
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        diff / a.norm().max(b.norm()).max(1e-12)
    }

    #[test]
    fn gradient_matches_finite_differences_on_five_points() {
        let mut r = rng::seeded(5);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..4).map(|_| r.random_range(-2.0..2.0)).collect())
            .collect();
        let data = LabeledData::new(
            rows.iter().map(Vec::as_slice).collect(),
            vec![0, 1, 2, 1, 0],
            3,
        );
        let mut model = LogisticModel::zeros(3, 4);
        model
            .weights
            .iter_mut()
            .for_each(|w| *w = r.random_range(-1.0..1.0));
        model
            .bias
            .iter_mut()
            .for_each(|b| *b = r.random_range(-1.0..1.0));
        let analytic = logistic_gradient(&model, &data, 0.01);
        let numeric = finite_difference(&model, &data, 0.01, 1e-5);
        assert!(rel_err(&analytic, &numeric) < 1e-5);
    }

    #[test]
    fn empty_batch_is_pure_penalty() {
        let mut model = LogisticModel::zeros(2, 3);
        model.weights = vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0];
        model.bias = vec![4.0, 5.0];
        let data = LabeledData::new(vec![], vec![], 2);
        let g = logistic_gradient(&model, &data, 0.25);
        assert_eq!(
            g.weights,
            model.weights.iter().map(|w| 0.5 * w).collect::<Vec<_>>()
        );
        assert_eq!(g.bias, vec![0.0, 0.0]);
    }

    #[test]
    fn converged_fit_has_small_gradient() {
        // Overlapping 1-d classes: the regularized optimum is interior and
        // reached well within the epoch budget.
        let xs = [-1.0, -0.5, 0.2, 0.3, -0.2, 0.5, 1.0, 1.5];
        let labels = vec![0, 0, 0, 1, 1, 1, 1, 0];
        let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        let data = LabeledData::new(rows.iter().map(|r| &r[..]).collect(), labels, 2);
        let config = LogisticConfig {
            learning_rate: 0.5,
            l2_penalty: 0.01,
            max_epochs: 20_000,
            convergence_tol: 1e-8,
        };
        let model = LogisticModel::fit(&data, &config).unwrap();
        assert!(logistic_gradient(&model, &data, config.l2_penalty).norm() < 1e-8);
    }

    #[test]
    fn separable_pair_is_classified() {
        let rows: Vec<&[f64]> = vec![&[-1.0], &[1.0]];
        let data = LabeledData::new(rows.clone(), vec![0, 1], 2);
        let model = LogisticModel::fit(&data, &LogisticConfig::default()).unwrap();
        let probs = model.predict_proba(&rows).unwrap();
        assert_eq!(probs[0].argmax(), 0);
        assert_eq!(probs[1].argmax(), 1);
    }

    #[test]
    fn zero_weights_give_uniform_posteriors() {
        let model = LogisticModel::zeros(4, 3);
        let p = model.predict_proba(&[&[1.0, -2.0, 7.0]]).unwrap();
        assert_eq!(p[0].as_slice(), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn dimension_mismatch_on_predict() {
        let model = LogisticModel::zeros(2, 3);
        assert!(matches!(
            model.predict_proba(&[&[1.0]]),
            Err(StudentError::DimensionMismatch {
                expected: 3,
                found: 1
            })
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let c = LogisticConfig {
            learning_rate: 0.0,
            ..LogisticConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
