use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ClassCatalog, DatasetError, EmbeddedItem, Pool};
use crate::rng;

/// Isotropic Gaussian blobs, one per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub dim: usize,
    pub per_class_counts: Vec<usize>,
    pub class_mean_separation: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvalidSpec(m));
        if self.classes < 2 {
            return bad(format!("classes must be >= 2, got {}", self.classes));
        }
        if self.dim < 1 {
            return bad("dim must be >= 1".into());
        }
        if self.per_class_counts.len() != self.classes {
            return bad(format!(
                "{} per-class counts for {} classes",
                self.per_class_counts.len(),
                self.classes
            ));
        }
        if self.per_class_counts.contains(&0) {
            return bad("every class count must be >= 1".into());
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!(
                "noise_sigma must be positive, got {}",
                self.noise_sigma
            ));
        }
        if !self.class_mean_separation.is_finite() {
            return bad("class_mean_separation must be finite".into());
        }
        Ok(())
    }

    pub fn catalog(&self) -> ClassCatalog {
        ClassCatalog::new((0..self.classes).map(|k| format!("class_{k}"))).expect("classes >= 2")
    }
}

/// Unit direction of class `k`'s mean: the k-th basis vector when `k < dim`,
/// otherwise a fixed pseudo-random unit vector that depends only on `(k, dim)`.
pub fn class_direction(k: usize, dim: usize) -> Vec<f64> {
    let mut dir = vec![0.0; dim];
    if k < dim {
        dir[k] = 1.0;
        return dir;
    }
    let mut r = rng::stream(0x9e37_79b9 ^ k as u64, dim as u64);
    loop {
        for v in dir.iter_mut() {
            *v = StandardNormal.sample(&mut r);
        }
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            dir.iter_mut().for_each(|v| *v /= norm);
            return dir;
        }
    }
}

/// Generates the blobs class by class; item ids are `syn-000000`, `syn-000001`, ...
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Pool, DatasetError> {
    spec.validate()?;
    let mut r = rng::stream(spec.seed, rng::streams::SYNTHETIC);
    let total: usize = spec.per_class_counts.iter().sum();
    let mut items = Vec::with_capacity(total);
    for (k, &count) in spec.per_class_counts.iter().enumerate() {
        let mean: Vec<f64> = class_direction(k, spec.dim)
            .into_iter()
            .map(|v| v * spec.class_mean_separation)
            .collect();
        for _ in 0..count {
            let features = mean
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(&mut r);
                    m + spec.noise_sigma * z
                })
                .collect();
            items.push(EmbeddedItem {
                id: format!("syn-{:06}", items.len()),
                features,
                text: None,
                gold_label: Some(k),
            });
        }
    }
    Pool::new(spec.dim, spec.catalog(), items)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(counts: Vec<usize>, dim: usize) -> SyntheticSpec {
        SyntheticSpec {
            classes: counts.len(),
            dim,
            per_class_counts: counts,
            class_mean_separation: 10.0,
            noise_sigma: 0.1,
            seed: 42,
        }
    }

    #[test]
    fn counts_read_back() {
        let pool = generate_synthetic(&spec(vec![100, 10, 10], 4)).unwrap();
        assert_eq!(pool.class_counts(), vec![100, 10, 10]);
        assert_eq!(pool.len(), 120);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_synthetic(&spec(vec![10, 10], 2)).unwrap();
        let b = generate_synthetic(&spec(vec![10, 10], 2)).unwrap();
        assert_eq!(a, b);
        let mut other = spec(vec![10, 10], 2);
        other.seed = 43;
        assert_ne!(a, generate_synthetic(&other).unwrap());
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = spec(vec![10, 10], 2);
        s.noise_sigma = 0.0;
        assert!(generate_synthetic(&s).is_err());
        let s = spec(vec![10], 2);
        assert!(generate_synthetic(&s).is_err());
        let mut s = spec(vec![10, 0], 2);
        s.classes = 2;
        assert!(generate_synthetic(&s).is_err());
        let mut s = spec(vec![10, 10], 2);
        s.dim = 0;
        assert!(generate_synthetic(&s).is_err());
    }

    #[test]
    fn directions_beyond_dim_are_unit_and_fixed() {
        let d = class_direction(5, 3);
        let norm: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(d, class_direction(5, 3));
        assert_eq!(class_direction(1, 3), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn blobs_sit_near_their_means() {
        let pool = generate_synthetic(&spec(vec![50, 50], 2)).unwrap();
        for item in pool.items() {
            let k = item.gold_label.unwrap();
            let dist = (item.features[k] - 10.0).abs();
            assert!(dist < 1.0, "{item:?}");
        }
    }
}
