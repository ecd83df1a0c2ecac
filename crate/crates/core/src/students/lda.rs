//! Linear discriminant analysis: Gaussian class conditionals sharing one
//! ridge-regularized covariance, priors from class frequencies.
//!
//! Fitting reduces to a linear scorer
//! `score_k(x) = x . (S^-1 mu_k) - mu_k . S^-1 mu_k / 2 + ln prior_k`,
//! whose softmax is the posterior. Classes absent from training get prior 0.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_rows, LabeledData, ProbabilityVector, StudentError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdaConfig {
    pub covariance_ridge: f64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            covariance_ridge: 1e-6,
        }
    }
}

impl LdaConfig {
    pub fn validate(&self) -> Result<(), StudentError> {
        if !(self.covariance_ridge > 0.0 && self.covariance_ridge.is_finite()) {
            return Err(StudentError::InvalidConfig(format!(
                "covariance_ridge must be positive, got {}",
                self.covariance_ridge
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaModel {
    pub classes: usize,
    pub dim: usize,
    pub means: Vec<Vec<f64>>,
    pub priors: Vec<f64>,
    /// Row-major `classes x dim`: `S^-1 mu_k`.
    pub coef: Vec<f64>,
    /// `-mu_k . S^-1 mu_k / 2 + ln prior_k`; `None` for classes with no support.
    pub intercept: Vec<Option<f64>>,
}

impl LdaModel {
    pub fn num_classes(&self) -> usize {
        self.classes
    }

    pub fn fit(data: &LabeledData<'_>, config: &LdaConfig) -> Result<Self, StudentError> {
        config.validate()?;
        let dim = data.validate()?;
        let k = data.num_classes;
        let n = data.len();
        let counts = data.class_counts();

        let mut means = vec![vec![0.0; dim]; k];
        for (row, &y) in data.rows.iter().zip(&data.labels) {
            for (m, x) in means[y].iter_mut().zip(row.iter()) {
                *m += x;
            }
        }
        for (mean, &c) in means.iter_mut().zip(&counts) {
            if c > 0 {
                mean.iter_mut().for_each(|m| *m /= c as f64);
            }
        }

        let supported = counts.iter().filter(|&&c| c > 0).count();
        let dof = if n > supported { n - supported } else { n };
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        for (row, &y) in data.rows.iter().zip(&data.labels) {
            let centered =
                DVector::from_iterator(dim, row.iter().zip(&means[y]).map(|(x, m)| x - m));
            cov.ger(1.0, &centered, &centered, 1.0);
        }
        cov /= dof as f64;
        for i in 0..dim {
            cov[(i, i)] += config.covariance_ridge;
        }
        let chol = cov.cholesky().ok_or_else(|| {
            StudentError::Numerical("shared covariance is not positive definite".into())
        })?;

        let priors: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let mut coef = Vec::with_capacity(k * dim);
        let mut intercept = Vec::with_capacity(k);
        for (mean, &prior) in means.iter().zip(&priors) {
            let mu = DVector::from_column_slice(mean);
            let a = chol.solve(&mu);
            coef.extend(a.iter().copied());
            intercept.push((prior > 0.0).then(|| -0.5 * mu.dot(&a) + prior.ln()));
        }
        let model = Self {
            classes: k,
            dim,
            means,
            priors,
            coef,
            intercept,
        };
        if model
            .coef
            .iter()
            .chain(model.intercept.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(StudentError::Numerical("non-finite discriminant".into()));
        }
        Ok(model)
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|c| match self.intercept[c] {
                None => f64::NEG_INFINITY,
                Some(b) => {
                    let a = &self.coef[c * self.dim..(c + 1) * self.dim];
                    b + a.iter().zip(row).map(|(x, y)| x * y).sum::<f64>()
                }
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
        let shapes_ok = self.classes >= 2
            && self.dim >= 1
            && Some(self.coef.len()) == self.classes.checked_mul(self.dim)
            && self.intercept.len() == self.classes
            && self.priors.len() == self.classes
            && self.means.len() == self.classes
            && self.means.iter().all(|m| m.len() == self.dim);
        if !shapes_ok {
            return Err(StudentError::Format(
                "lda parameter shapes do not match".into(),
            ));
        }
        if self.intercept.iter().all(Option::is_none) {
            return Err(StudentError::Format(
                "lda model has no supported class".into(),
            ));
        }
        let finite = self
            .coef
            .iter()
            .chain(self.intercept.iter().flatten())
            .chain(&self.priors)
            .chain(self.means.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(StudentError::Format("non-finite lda parameter".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticSpec};

    #[test]
    fn midpoint_of_symmetric_gaussians_is_even() {
        // Mirror-symmetric samples around x = 1: equal priors, shared covariance.
        let pts: Vec<[f64; 2]> = vec![
            [-1.0, 0.5],
            [0.0, -0.5],
            [-0.5, 0.2],
            [0.5, -0.2],
            [3.0, -0.5],
            [2.0, 0.5],
            [2.5, -0.2],
            [1.5, 0.2],
        ];
        let data = LabeledData::new(
            pts.iter().map(|p| &p[..]).collect(),
            vec![0, 0, 0, 0, 1, 1, 1, 1],
            2,
        );
        let m = LdaModel::fit(&data, &LdaConfig::default()).unwrap();
        let mid = [1.0, 0.0];
        let p = m.predict_proba(&[&mid]).unwrap();
        assert!((p[0].as_slice()[0] - 0.5).abs() < 1e-6, "{:?}", p[0]);
    }

    #[test]
    fn three_blobs_trained_nearly_perfectly() {
        let pool = generate_synthetic(&SyntheticSpec {
            classes: 3,
            dim: 3,
            per_class_counts: vec![10, 10, 10],
            class_mean_separation: 10.0,
            noise_sigma: 0.1,
            seed: 3,
        })
        .unwrap();
        let rows: Vec<&[f64]> = pool.items().iter().map(|i| i.features.as_slice()).collect();
        let labels: Vec<usize> = pool.items().iter().map(|i| i.gold_label.unwrap()).collect();

        // Exact Bayes rule on the generating Gaussians: equal isotropic
        // covariance and priors, so the nearest generating mean wins.
        let bayes: Vec<usize> = rows
            .iter()
            .map(|x| {
                (0..3)
                    .min_by(|&a, &b| {
                        let da: f64 = (0..3)
                            .map(|j| (x[j] - if j == a { 10.0 } else { 0.0 }).powi(2))
                            .sum();
                        let db: f64 = (0..3)
                            .map(|j| (x[j] - if j == b { 10.0 } else { 0.0 }).powi(2))
                            .sum();
                        da.total_cmp(&db)
                    })
                    .unwrap()
            })
            .collect();
        assert_eq!(bayes, labels);

        let data = LabeledData::new(rows.clone(), labels.clone(), 3);
        let m = LdaModel::fit(&data, &LdaConfig::default()).unwrap();
        let pred: Vec<usize> = m
            .predict_proba(&rows)
            .unwrap()
            .iter()
            .map(|p| p.argmax())
            .collect();
        let correct = pred.iter().zip(&labels).filter(|(a, b)| a == b).count();
        assert!(correct >= 29, "{correct}/30");
    }

    #[test]
    fn absent_class_gets_zero_probability() {
        let rows: Vec<&[f64]> = vec![&[0.0], &[0.1], &[1.0], &[1.1]];
        let data = LabeledData::new(rows, vec![0, 0, 2, 2], 3);
        let m = LdaModel::fit(&data, &LdaConfig::default()).unwrap();
        let p = m.predict_proba(&[&[0.5]]).unwrap();
        assert_eq!(p[0].as_slice()[1], 0.0);
        assert!((p[0].as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
