//! Teacher oracles.
//!
//! [`Teacher`] wraps either a replay of gold labels (optionally noisy) or a
//! chat-completions client, and fronts both with a [`LabelCache`] so an item
//! is billed at most one remote call.

mod cache;
mod llm;

use std::collections::HashSet;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{parse_cache, CacheRecord, LabelCache};
pub use llm::{
    class_list, parse_chat_response, parse_label, render_prompt, LlmClient, LlmLabel,
    LlmOracleConfig, DEFAULT_PROMPT_TEMPLATE, DEFAULT_TOKEN_ENV,
};

use crate::dataset::{EmbeddedItem, Pool};
use crate::rng::{self, Rng};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("item {0} has no gold label")]
    MissingGoldLabel(String),
    #[error("item {0} has no text to send to the teacher")]
    MissingText(String),
    #[error("labeling item {id} failed: {message}")]
    Network { id: String, message: String },
    #[error("could not parse a class from the teacher's reply for item {id}: {response:?}")]
    ParseFailure { id: String, response: String },
    #[error("malformed chat-completions response: {0}")]
    BadResponse(String),
    #[error("label cache: {0}")]
    Cache(String),
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
    #[error("teacher endpoint unreachable: {0}")]
    Connectivity(String),
    #[error("gold label {label} of item {id} is outside the catalog")]
    LabelOutOfRange { id: String, label: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    #[default]
    Replay,
    Llm,
}

/// Returns the gold label with probability `1 - noise_rate`, otherwise a
/// uniformly random different class. The rng is untouched when `noise_rate`
/// is zero.
pub fn replay_label(
    item: &EmbeddedItem,
    num_classes: usize,
    noise_rate: f64,
    rng: &mut Rng,
) -> Result<usize, OracleError> {
    let gold = item
        .gold_label
        .ok_or_else(|| OracleError::MissingGoldLabel(item.id.clone()))?;
    if gold >= num_classes {
        return Err(OracleError::LabelOutOfRange {
            id: item.id.clone(),
            label: gold,
        });
    }
    if noise_rate > 0.0 && num_classes > 1 && rng.random::<f64>() < noise_rate {
        let other = rng.random_range(0..num_classes - 1);
        return Ok(if other >= gold { other + 1 } else { other });
    }
    Ok(gold)
}

enum Backend {
    Replay { noise_rate: f64, rng: Rng },
    Llm(LlmClient),
}

pub struct Teacher {
    backend: Backend,
    cache: LabelCache,
    calls_made: u64,
    cache_hits: u64,
}

impl std::fmt::Debug for Teacher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Teacher")
            .field("mode", &self.mode())
            .field("calls_made", &self.calls_made)
            .field("cache_hits", &self.cache_hits)
            .finish()
    }
}

impl Teacher {
    /// Gold-label replay with an in-memory cache. Noise draws come from the
    /// oracle-noise stream of `seed`.
    pub fn replay(noise_rate: f64, seed: u64) -> Result<Self, OracleError> {
        if !(0.0..1.0).contains(&noise_rate) {
            return Err(OracleError::InvalidConfig(format!(
                "noise_rate {noise_rate} not in [0, 1)"
            )));
        }
        Ok(Self {
            backend: Backend::Replay {
                noise_rate,
                rng: rng::stream(seed, rng::streams::ORACLE_NOISE),
            },
            cache: LabelCache::in_memory(),
            calls_made: 0,
            cache_hits: 0,
        })
    }

    pub fn llm(config: LlmOracleConfig, cache: LabelCache) -> Result<Self, OracleError> {
        Ok(Self {
            backend: Backend::Llm(LlmClient::new(config)?),
            cache,
            calls_made: 0,
            cache_hits: 0,
        })
    }

    pub fn with_cache(mut self, cache: LabelCache) -> Self {
        self.cache = cache;
        self
    }

    pub fn mode(&self) -> OracleMode {
        match self.backend {
            Backend::Replay { .. } => OracleMode::Replay,
            Backend::Llm(_) => OracleMode::Llm,
        }
    }

    /// Labels produced by the backend (cache misses).
    pub fn calls_made(&self) -> u64 {
        self.calls_made
    }

    pub fn cache_hits(&self) -> u64 {
        self.cache_hits
    }

    pub fn requests(&self) -> u64 {
        self.calls_made + self.cache_hits
    }

    pub fn cache(&self) -> &LabelCache {
        &self.cache
    }

    /// Labels pool items (given by pool index). The output is
    /// `(item id, class index)` in input order. Cached ids are answered
    /// without a call; an id repeated within one request is billed once.
    pub fn label_batch(
        &mut self,
        items: &[usize],
        pool: &Pool,
    ) -> Result<Vec<(String, usize)>, OracleError> {
        let k = pool.num_classes();
        let mut seen = HashSet::new();
        let mut misses = Vec::new();
        for &i in items {
            let id = &pool.item(i).id;
            if self.cache.get(id).is_none() && seen.insert(id.as_str()) {
                misses.push(i);
            }
        }

        match &mut self.backend {
            Backend::Replay { noise_rate, rng } => {
                for &i in &misses {
                    let item = pool.item(i);
                    let label = replay_label(item, k, *noise_rate, rng)?;
                    self.cache.insert(&item.id, label, "")?;
                    self.calls_made += 1;
                }
            }
            Backend::Llm(client) => {
                let mut requests = Vec::with_capacity(misses.len());
                for &i in &misses {
                    let item = pool.item(i);
                    match item.text.as_deref() {
                        Some(t) if !t.trim().is_empty() => requests.push((item.id.as_str(), t)),
                        _ => return Err(OracleError::MissingText(item.id.clone())),
                    }
                }
                let results = client.label_many(&requests, pool.catalog());
                // Successful answers are cached even if a sibling failed, so a
                // resumed run does not pay for them again.
                let mut first_err = None;
                for ((id, _), res) in requests.iter().zip(results) {
                    match res {
                        Ok(LlmLabel { label, raw }) => {
                            self.cache.insert(id, label, &raw)?;
                            self.calls_made += 1;
                        }
                        Err(e) => {
                            first_err.get_or_insert(e);
                        }
                    }
                }
                if let Some(e) = first_err {
                    return Err(e);
                }
            }
        }

        self.cache_hits += (items.len() - misses.len()) as u64;
        items
            .iter()
            .map(|&i| {
                let id = &pool.item(i).id;
                let rec = self.cache.get(id).expect("label cached above");
                if rec.label >= k {
                    return Err(OracleError::Cache(format!(
                        "cached label {} for {id} outside catalog",
                        rec.label
                    )));
                }
                Ok((id.clone(), rec.label))
            })
            .collect()
    }
}
