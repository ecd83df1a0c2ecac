//! Line-delimited JSON pool files.
//!
//! ```text
//! {"dim":4,"classes":["a","b"]}
//! {"id":"x1","features":[0.5,1.0,-2.0,3.25],"label":"a"}
//! {"id":"x2","features":[1.5,0.0,2.0,1e-7],"text":"free text"}
//! ```
//!
//! Reals are written in shortest round-trip form, so a file produced by
//! [`serialize_pool`] reloads and re-serializes to identical bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassCatalog, DatasetError, EmbeddedItem, Pool};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    dim: usize,
    classes: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    features: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

pub fn load_pool(
    path: impl AsRef<Path>,
    expected_dim: Option<usize>,
) -> Result<Pool, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_pool(&text, expected_dim)
}

/// Parses pool file contents. Blank lines are ignored.
pub fn parse_pool(text: &str, expected_dim: Option<usize>) -> Result<Pool, DatasetError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let (header_line, raw) = lines.next().ok_or(DatasetError::Malformed {
        line: 1,
        message: "missing header record".into(),
    })?;
    let header: Header = serde_json::from_str(raw).map_err(|e| DatasetError::Malformed {
        line: header_line,
        message: format!("bad header: {e}"),
    })?;
    if header.dim == 0 {
        return Err(DatasetError::Malformed {
            line: header_line,
            message: "dim must be positive".into(),
        });
    }
    if let Some(expected) = expected_dim {
        if expected != header.dim {
            return Err(DatasetError::Malformed {
                line: header_line,
                message: format!(
                    "header dim {} does not match expected {expected}",
                    header.dim
                ),
            });
        }
    }
    let catalog = ClassCatalog::new(header.classes)?;

    let mut items = Vec::new();
    for (line, raw) in lines {
        let rec: Record = serde_json::from_str(raw).map_err(|e| DatasetError::Malformed {
            line,
            message: e.to_string(),
        })?;
        if rec.features.len() != header.dim {
            return Err(DatasetError::DimensionMismatch {
                id: rec.id,
                expected: header.dim,
                found: rec.features.len(),
            });
        }
        let gold_label = match rec.label {
            None => None,
            Some(name) => Some(
                catalog
                    .index_of(&name)
                    .ok_or(DatasetError::UnknownLabel { line, label: name })?,
            ),
        };
        items.push(EmbeddedItem {
            id: rec.id,
            features: rec.features,
            text: rec.text,
            gold_label,
        });
    }
    Pool::new(header.dim, catalog, items)
}

pub fn serialize_pool(pool: &Pool) -> String {
    let header = Header {
        dim: pool.dim(),
        classes: pool.catalog().names().to_vec(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for item in pool.items() {
        let rec = Record {
            id: item.id.clone(),
            features: item.features.clone(),
            text: item.text.clone(),
            label: item
                .gold_label
                .and_then(|l| pool.catalog().name(l))
                .map(str::to_owned),
        };
        out.push_str(&serde_json::to_string(&rec).expect("finite record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_pool(pool: &Pool, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    std::fs::write(path, serialize_pool(pool)).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}
