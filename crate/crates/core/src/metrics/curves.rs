//! Learning-curve CSV: one row per (run, ledger row).

use std::path::Path;

use super::{MetricsError, RunLedger};

pub const CURVE_HEADER: [&str; 10] = [
    "run_id",
    "strategy",
    "student",
    "seed",
    "labels_spent",
    "accuracy",
    "balanced_accuracy",
    "candidates_examined",
    "selection_inferences",
    "oracle_calls",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub run_id: String,
    pub strategy: String,
    pub student: String,
    pub seed: u64,
    pub labels_spent: usize,
    pub accuracy: Option<f64>,
    pub balanced_accuracy: Option<f64>,
    pub candidates_examined: u64,
    pub selection_inferences: u64,
    pub oracle_calls: u64,
}

/// Six significant digits, fixed notation.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Renders ledgers sorted by (student, strategy, seed, run id); rows keep
/// ledger order.
pub fn emit_curves(ledgers: &[RunLedger]) -> String {
    let mut order: Vec<&RunLedger> = ledgers.iter().collect();
    order.sort_by(|a, b| {
        (
            &a.meta.student,
            &a.meta.strategy,
            a.meta.seed,
            &a.meta.run_id,
        )
            .cmp(&(
                &b.meta.student,
                &b.meta.strategy,
                b.meta.seed,
                &b.meta.run_id,
            ))
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CURVE_HEADER).expect("in-memory write");
    let opt = |v: Option<f64>| v.map(format_sig6).unwrap_or_default();
    for ledger in order {
        let m = &ledger.meta;
        for r in &ledger.rows {
            w.write_record([
                m.run_id.clone(),
                m.strategy.clone(),
                m.student.clone(),
                m.seed.to_string(),
                r.labels_spent.to_string(),
                opt(r.accuracy),
                opt(r.balanced_accuracy),
                r.candidates_examined.to_string(),
                r.selection_inferences.to_string(),
                r.oracle_calls.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 fields")
}

pub fn write_curves(ledgers: &[RunLedger], path: impl AsRef<Path>) -> Result<(), MetricsError> {
    std::fs::write(path.as_ref(), emit_curves(ledgers)).map_err(|e| MetricsError::Io(e.to_string()))
}

pub fn parse_curves(text: &str) -> Result<Vec<CurveRow>, MetricsError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| MetricsError::MalformedCurve {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(CURVE_HEADER) {
        return Err(MetricsError::MalformedCurve {
            line: 1,
            message: format!("expected header {}", CURVE_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let bad = |message: String| MetricsError::MalformedCurve { line, message };
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != CURVE_HEADER.len() {
            return Err(bad(format!("{} fields", record.len())));
        }
        let int = |idx: usize| -> Result<u64, MetricsError> {
            record[idx]
                .parse::<u64>()
                .map_err(|e| bad(format!("{}: {e}", CURVE_HEADER[idx])))
        };
        let real = |idx: usize| -> Result<Option<f64>, MetricsError> {
            let field = &record[idx];
            if field.is_empty() {
                return Ok(None);
            }
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                Ok(v) => Err(bad(format!("{}: non-finite {v}", CURVE_HEADER[idx]))),
                Err(e) => Err(bad(format!("{}: {e}", CURVE_HEADER[idx]))),
            }
        };
        rows.push(CurveRow {
            run_id: record[0].to_string(),
            strategy: record[1].to_string(),
            student: record[2].to_string(),
            seed: int(3)?,
            labels_spent: usize::try_from(int(4)?).map_err(|e| bad(e.to_string()))?,
            accuracy: real(5)?,
            balanced_accuracy: real(6)?,
            candidates_examined: int(7)?,
            selection_inferences: int(8)?,
            oracle_calls: int(9)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{LedgerRow, RowPhase, RunMeta};

    fn ledger(run: &str, seed: u64, batches: usize) -> RunLedger {
        let mut l = RunLedger::new(
            RunMeta {
                run_id: run.into(),
                strategy: "mraru".into(),
                student: "lda".into(),
                seed,
                config_digest: "d".into(),
            },
            1_000,
        );
        for b in 0..batches {
            l.rows.push(LedgerRow {
                phase: RowPhase::Batch,
                batch: b + 1,
                labels_spent: 25 * (b + 1),
                accepted: 25,
                candidates_examined: 100,
                selection_inferences: 100,
                oracle_calls: 25,
                unlabeled_at_start: 500,
                accuracy: Some(0.5 + b as f64 / 10.0),
                balanced_accuracy: (b % 2 == 0).then_some(1.0 / 3.0),
                acceptance_rate_to_date: Some(0.25),
            });
        }
        l
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(format_sig6(1.0), "1.00000");
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(0.0123456789), "0.0123457");
        assert_eq!(format_sig6(123456.7), "123457");
    }

    #[test]
    fn two_runs_three_batches() {
        let text = emit_curves(&[ledger("b", 2, 3), ledger("a", 1, 3)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], CURVE_HEADER.join(","));
        assert!(lines[1].starts_with("a,mraru,lda,1,25,0.500000,0.333333,100,100,25"));
        assert!(lines[2].ends_with(",,100,100,25"));
        let parsed = parse_curves(&text).unwrap();
        assert_eq!(parsed.len(), 6);
        assert_eq!(parsed[1].balanced_accuracy, None);
        assert_eq!(text, emit_curves(&[ledger("b", 2, 3), ledger("a", 1, 3)]));
    }

    #[test]
    fn empty_list_is_header_only() {
        assert_eq!(emit_curves(&[]), format!("{}\n", CURVE_HEADER.join(",")));
        assert!(parse_curves(&emit_curves(&[])).unwrap().is_empty());
    }

    #[test]
    fn malformed_files_rejected() {
        assert!(parse_curves("a,b\n1,2\n").is_err());
        let bad_seed = format!("{}\nr,s,t,x,1,,,0,0,0\n", CURVE_HEADER.join(","));
        assert!(matches!(
            parse_curves(&bad_seed),
            Err(MetricsError::MalformedCurve { line: 2, .. })
        ));
        let nan = format!("{}\nr,s,t,1,1,NaN,,0,0,0\n", CURVE_HEADER.join(","));
        assert!(parse_curves(&nan).is_err());
    }
}
