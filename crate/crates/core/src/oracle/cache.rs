//! Persistent label cache: line-delimited `{"id","label","raw","ts"}` records,
//! appended as labels arrive. Handles are cheap clones sharing one map, and
//! writes are serialized through its lock.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::OracleError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheRecord {
    pub id: String,
    pub label: usize,
    pub raw: String,
    /// Seconds since the Unix epoch.
    pub ts: u64,
}

#[derive(Debug, Default)]
struct Inner {
    entries: HashMap<String, CacheRecord>,
    file: Option<File>,
}

#[derive(Debug, Clone, Default)]
pub struct LabelCache {
    inner: Arc<Mutex<Inner>>,
    path: Option<PathBuf>,
}

/// Parses cache file contents. Later duplicates of an id are ignored.
pub fn parse_cache(text: &str) -> Result<Vec<CacheRecord>, OracleError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<CacheRecord>(l)
                .map_err(|e| OracleError::Cache(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

impl LabelCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads `path` if it exists and appends new records to it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, OracleError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let text =
                std::fs::read_to_string(&path).map_err(|e| OracleError::Cache(e.to_string()))?;
            for rec in parse_cache(&text)? {
                entries.entry(rec.id.clone()).or_insert(rec);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| OracleError::Cache(format!("{}: {e}", path.display())))?;
        Ok(Self {
            inner: Arc::new(Mutex::new(Inner {
                entries,
                file: Some(file),
            })),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, id: &str) -> Option<CacheRecord> {
        self.inner
            .lock()
            .expect("cache lock")
            .entries
            .get(id)
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records a label; an id already present keeps its first record.
    pub fn insert(&self, id: &str, label: usize, raw: &str) -> Result<(), OracleError> {
        let mut inner = self.inner.lock().expect("cache lock");
        if inner.entries.contains_key(id) {
            return Ok(());
        }
        let rec = CacheRecord {
            id: id.to_string(),
            label,
            raw: raw.to_string(),
            ts: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        };
        if let Some(file) = inner.file.as_mut() {
            let mut line =
                serde_json::to_string(&rec).map_err(|e| OracleError::Cache(e.to_string()))?;
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|e| OracleError::Cache(e.to_string()))?;
        }
        inner.entries.insert(rec.id.clone(), rec);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        {
            let cache = LabelCache::open(&path).unwrap();
            cache.insert("a", 1, "Government").unwrap();
            cache.insert("b", 0, "Banks").unwrap();
            cache.insert("a", 0, "ignored").unwrap();
        }
        let cache = LabelCache::open(&path).unwrap();
        assert_eq!(cache.len(), 2);
        assert_eq!(cache.get("a").unwrap().label, 1);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
    }

    #[test]
    fn malformed_cache_is_an_error() {
        assert!(parse_cache("{\"id\":\"a\"}\n").is_err());
        assert_eq!(parse_cache("\n").unwrap(), vec![]);
    }
}
