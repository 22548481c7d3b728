use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::record::{DatasetRecord, Provenance};
use crate::lifting::{lift, ApRecognizer, DomainProfile, FullPair, LiftError};
use crate::syntax::{parse_full, FormatSpec};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {message}")]
    FileUnreadable { path: PathBuf, message: String },
    #[error("line {line}: {message}")]
    SchemaMismatch { line: usize, message: String },
    #[error("cannot write quarantine file {path}: {message}")]
    QuarantineWrite { path: PathBuf, message: String },
}

/// One input row: a full sentence and its grounded formula.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullRow {
    pub nl: String,
    pub stl: String,
    /// Overrides the ingest-wide format for this row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarantineRow {
    pub line: usize,
    pub row: Value,
    pub reason: String,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct IngestReport {
    pub records: Vec<DatasetRecord>,
    pub quarantined: Vec<QuarantineRow>,
}

fn lift_reason(e: &LiftError) -> String {
    serde_json::to_value(e)
        .ok()
        .and_then(|v| v.get("kind").and_then(Value::as_str).map(String::from))
        .unwrap_or_else(|| "lift_error".into())
}

/// Lifts one row. Errors carry a quarantine reason and detail.
pub fn ingest_row(
    row: &FullRow,
    fmt: FormatSpec,
    profile: &DomainProfile,
    recognizer: &dyn ApRecognizer,
) -> Result<(FullPair, crate::lifting::LiftedPair), (String, String)> {
    let fmt = match &row.format {
        Some(f) => f
            .parse()
            .map_err(|_| ("unknown_format".to_string(), f.clone()))?,
        None => fmt,
    };
    let stl = parse_full(&row.stl, fmt, &profile.lexicon())
        .map_err(|e| ("parse_failure".to_string(), e.to_string()))?;
    let ap_map = crate::lifting::recognize_aps(&row.nl, recognizer)
        .map_err(|e| (lift_reason(&e), e.to_string()))?;
    let full = FullPair {
        nl: row.nl.clone(),
        stl,
        ap_map,
    };
    let lifted = lift(&full).map_err(|e| (lift_reason(&e), e.to_string()))?;
    Ok((full, lifted))
}

/// Reads JSONL rows `{"nl": .., "stl": ..}` and lifts each one. Rows that fail
/// parsing, recognition or lifting go to `quarantine` (if given) with reasons.
pub fn ingest_full_pairs(
    path: &Path,
    profile: &DomainProfile,
    recognizer: &dyn ApRecognizer,
    fmt: FormatSpec,
    quarantine: Option<&Path>,
) -> Result<IngestReport, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|e| IngestError::FileUnreadable {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut report = IngestReport::default();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| IngestError::SchemaMismatch {
            line: line_no,
            message: e.to_string(),
        })?;
        let row: FullRow =
            serde_json::from_value(value.clone()).map_err(|e| IngestError::SchemaMismatch {
                line: line_no,
                message: e.to_string(),
            })?;
        match ingest_row(&row, fmt, profile, recognizer) {
            Ok((full, lifted)) => {
                let id = format!("ing-{}-{:06}", profile.name, line_no);
                let mut rec =
                    DatasetRecord::new(id, &profile.name, lifted.nl, &lifted.stl, Provenance::Ingested);
                rec.ap_map = Some(full.ap_map);
                rec.metadata.full_nl = Some(row.nl.clone());
                rec.metadata.full_stl = Some(row.stl.clone());
                report.records.push(rec);
            }
            Err((reason, detail)) => report.quarantined.push(QuarantineRow {
                line: line_no,
                row: value,
                reason,
                detail,
            }),
        }
    }
    if let Some(q) = quarantine {
        let qerr = |e: std::io::Error| IngestError::QuarantineWrite {
            path: q.to_path_buf(),
            message: e.to_string(),
        };
        let mut f = std::fs::File::create(q).map_err(qerr)?;
        for row in &report.quarantined {
            let json = serde_json::to_string(row).expect("serializable");
            writeln!(f, "{json}").map_err(qerr)?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, lines: &[&str]) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, lines.join("\n")).unwrap();
        p
    }

    #[test]
    fn gltl_row_and_unmapped_atom() {
        let dir = tempfile::tempdir().unwrap();
        let profile = DomainProfile::builtin("gltl").unwrap();
        let input = write(
            dir.path(),
            "in.jsonl",
            &[
                r#"{"nl": "enter the blue or orange room and proceed until the green room .", "stl": "finally ( ( red_room or blue_room ) and finally green_room )"}"#,
                r#"{"nl": "go to the blue room .", "stl": "finally ( blue_room and finally yellow_room )"}"#,
            ],
        );
        let q = dir.path().join("q.jsonl");
        let rep = ingest_full_pairs(&input, &profile, &profile.recognizer(), FormatSpec::IN_WORD, Some(&q)).unwrap();
        assert_eq!(rep.records.len(), 1);
        assert_eq!(rep.records[0].ap_map.as_ref().unwrap().len(), 3);
        assert_eq!(rep.quarantined.len(), 1);
        assert_eq!(rep.quarantined[0].reason, "unmapped_atom");
        let qtext = std::fs::read_to_string(&q).unwrap();
        let qrow: QuarantineRow = serde_json::from_str(qtext.lines().next().unwrap()).unwrap();
        assert_eq!(qrow.line, 2);
    }

    #[test]
    fn empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let profile = DomainProfile::builtin("cw").unwrap();
        let input = write(dir.path(), "e.jsonl", &[]);
        let rep = ingest_full_pairs(&input, &profile, &profile.recognizer(), FormatSpec::IN_WORD, None).unwrap();
        assert!(rep.records.is_empty() && rep.quarantined.is_empty());
    }

    #[test]
    fn schema_mismatch_and_unreadable() {
        let dir = tempfile::tempdir().unwrap();
        let profile = DomainProfile::builtin("cw").unwrap();
        let bad = write(dir.path(), "b.jsonl", &[r#"{"sentence": "x"}"#]);
        assert!(matches!(
            ingest_full_pairs(&bad, &profile, &profile.recognizer(), FormatSpec::IN_WORD, None),
            Err(IngestError::SchemaMismatch { line: 1, .. })
        ));
        assert!(matches!(
            ingest_full_pairs(&dir.path().join("none"), &profile, &profile.recognizer(), FormatSpec::IN_WORD, None),
            Err(IngestError::FileUnreadable { .. })
        ));
    }
}
