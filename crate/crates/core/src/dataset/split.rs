use rand::seq::SliceRandom;

use super::{DatasetError, Pool};
use crate::rng;

/// Disjoint train pool and gold-labeled evaluation set, as sorted item indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train_pool: Vec<usize>,
    pub eval_set: Vec<usize>,
}

/// Stratified hold-out split.
///
/// The eval set gets `round(fraction * labeled)` items, apportioned across
/// classes by largest remainder so each class is within one item of its
/// proportional share. Items without a gold label always stay in the train pool.
pub fn split(pool: &Pool, eval_fraction: f64, seed: u64) -> Result<DatasetSplit, DatasetError> {
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(DatasetError::InvalidFraction(eval_fraction));
    }
    let k = pool.num_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut train_pool = Vec::new();
    for (i, item) in pool.items().iter().enumerate() {
        match item.gold_label {
            Some(label) => by_class[label].push(i),
            None => train_pool.push(i),
        }
    }
    let labeled: usize = by_class.iter().map(Vec::len).sum();
    let target = (eval_fraction * labeled as f64).round() as usize;

    let ideal: Vec<f64> = by_class
        .iter()
        .map(|c| eval_fraction * c.len() as f64)
        .collect();
    let mut quota: Vec<usize> = ideal.iter().map(|v| v.floor() as usize).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let ra = ideal[a] - ideal[a].floor();
        let rb = ideal[b] - ideal[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut short = target.saturating_sub(quota.iter().sum());
    for &c in order.iter().cycle().take(k * 2) {
        if short == 0 {
            break;
        }
        if quota[c] < by_class[c].len() {
            quota[c] += 1;
            short -= 1;
        }
    }

    let mut r = rng::stream(seed, rng::streams::SPLIT);
    let mut eval_set = Vec::with_capacity(target);
    for (members, &q) in by_class.iter_mut().zip(&quota) {
        members.shuffle(&mut r);
        eval_set.extend_from_slice(&members[..q]);
        train_pool.extend_from_slice(&members[q..]);
    }
    train_pool.sort_unstable();
    eval_set.sort_unstable();
    Ok(DatasetSplit {
        train_pool,
        eval_set,
    })
}
