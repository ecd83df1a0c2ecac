//! Entry points shared by the fuzz targets and the corpus replay test.
//!
//! Each function accepts arbitrary bytes, must never panic, and asserts the
//! round-trip properties its format promises.

use crate::dataset::{parse_pool, serialize_pool, ClassCatalog};
use crate::harness::ExperimentConfig;
use crate::metrics::{emit_curves, parse_curves};
use crate::oracle::{parse_cache, parse_chat_response, parse_label};
use crate::students::{ProbabilisticClassifier, StudentModel};

pub type Entry = fn(&[u8]);

pub const TARGETS: [(&str, Entry); 7] = [
    ("pool_jsonl", pool_jsonl),
    ("label_response", label_response),
    ("chat_response", chat_response),
    ("experiment_config", experiment_config),
    ("model_document", model_document),
    ("curve_csv", curve_csv),
    ("label_cache", label_cache),
];

fn text(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

pub fn pool_jsonl(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(pool) = parse_pool(s, None) {
        let again = parse_pool(&serialize_pool(&pool), None).expect("serialized pool reparses");
        assert_eq!(again, pool);
    }
}

pub fn label_response(data: &[u8]) {
    let Some(s) = text(data) else { return };
    let catalog = ClassCatalog::new([
        "Banks and Trades",
        "Consumer/Community",
        "Government",
        "General Public",
        "Other",
    ])
    .expect("valid catalog");
    if let Some(k) = parse_label(s, &catalog) {
        assert!(s
            .to_lowercase()
            .contains(&catalog.names()[k].to_lowercase()));
    }
}

pub fn chat_response(data: &[u8]) {
    if let Some(s) = text(data) {
        let _ = parse_chat_response(s);
    }
}

pub fn experiment_config(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(config) = ExperimentConfig::parse(s) {
        let _ = config.to_toml();
    }
}

pub fn model_document(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(model) = StudentModel::from_document(s) {
        let doc = model.to_document().expect("loaded model serializes");
        StudentModel::from_document(&doc).expect("serialized model reloads");
        for dim in 1..=8 {
            let row = vec![0.5; dim];
            if let Ok(probs) = model.predict_proba(&[&row]) {
                let p = probs[0].as_slice();
                let total: f64 = p.iter().sum();
                assert!(
                    p.iter().all(|v| (0.0..=1.0).contains(v)),
                    "probabilities {p:?}"
                );
                assert!((total - 1.0).abs() < 1e-6, "probabilities sum to {total}");
            }
        }
    }
}

pub fn curve_csv(data: &[u8]) {
    let Some(s) = text(data) else { return };
    let _ = parse_curves(s);
    let _ = emit_curves(&[]);
}

pub fn label_cache(data: &[u8]) {
    if let Some(s) = text(data) {
        let _ = parse_cache(s);
    }
}
