use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::Utc;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::record::{DatasetRecord, HistoryEntry, Status};
use crate::lifting::sentence_placeholders;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnnotationError {
    #[error("record `{id}` not found")]
    NotFound { id: String },
    #[error("record `{id}` is {actual}, expected {expected}")]
    WrongStatus {
        id: String,
        actual: &'static str,
        expected: &'static str,
    },
    #[error("reviewer `{reviewer}` annotated this record")]
    SelfReview { reviewer: String },
    #[error("stale version {supplied}; record is at {current}")]
    VersionConflict { supplied: u64, current: u64 },
    #[error("sentence placeholders {sentence:?} differ from formula placeholders {formula:?}")]
    PlaceholderMismatch { sentence: Vec<u32>, formula: Vec<u32> },
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("storage: {0}")]
    Storage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> StoreError {
    StoreError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Reads a JSONL dataset. Later lines replace earlier ones with the same id;
/// order follows first appearance.
pub fn read_records(path: &Path) -> Result<Vec<DatasetRecord>, StoreError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut order: Vec<DatasetRecord> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DatasetRecord = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        match index.get(&rec.id) {
            Some(&i) => order[i] = rec,
            None => {
                index.insert(rec.id.clone(), order.len());
                order.push(rec);
            }
        }
    }
    Ok(order)
}

/// Writes records as a fresh JSONL file.
pub fn write_records(path: &Path, records: &[DatasetRecord]) -> Result<(), StoreError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| io_err(path, e))?;
        writeln!(w, "{line}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Append-only JSONL dataset with in-memory latest state.
#[derive(Debug)]
pub struct DatasetStore {
    path: PathBuf,
    records: Vec<DatasetRecord>,
    index: HashMap<String, usize>,
}

impl DatasetStore {
    /// Opens `path`, creating an empty file if it does not exist.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let records = if path.exists() {
            read_records(path)?
        } else {
            File::create(path).map_err(|e| io_err(path, e))?;
            Vec::new()
        };
        let index = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect();
        Ok(DatasetStore {
            path: path.to_path_buf(),
            records,
            index,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> &[DatasetRecord] {
        &self.records
    }

    pub fn get(&self, id: &str) -> Option<&DatasetRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    fn append_line(&self, rec: &DatasetRecord) -> Result<(), StoreError> {
        let mut f = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .map_err(|e| io_err(&self.path, e))?;
        let line = serde_json::to_string(rec).map_err(|e| io_err(&self.path, e))?;
        writeln!(f, "{line}").map_err(|e| io_err(&self.path, e))
    }

    /// Appends or replaces a record.
    pub fn put(&mut self, rec: DatasetRecord) -> Result<(), StoreError> {
        self.append_line(&rec)?;
        match self.index.get(&rec.id) {
            Some(&i) => self.records[i] = rec,
            None => {
                self.index.insert(rec.id.clone(), self.records.len());
                self.records.push(rec);
            }
        }
        Ok(())
    }

    pub fn extend(&mut self, recs: impl IntoIterator<Item = DatasetRecord>) -> Result<(), StoreError> {
        for r in recs {
            self.put(r)?;
        }
        Ok(())
    }

    /// Rewrites the file with one line per record.
    pub fn compact(&self) -> Result<(), StoreError> {
        let tmp = self.path.with_extension("jsonl.tmp");
        write_records(&tmp, &self.records)?;
        std::fs::rename(&tmp, &self.path).map_err(|e| io_err(&self.path, e))
    }

    fn mutate(
        &mut self,
        id: &str,
        version: u64,
        expected: Status,
        f: impl FnOnce(&mut DatasetRecord) -> Result<(), AnnotationError>,
    ) -> Result<&DatasetRecord, AnnotationError> {
        let Some(&i) = self.index.get(id) else {
            return Err(AnnotationError::NotFound { id: id.into() });
        };
        let mut rec = self.records[i].clone();
        if rec.version != version {
            return Err(AnnotationError::VersionConflict {
                supplied: version,
                current: rec.version,
            });
        }
        if rec.status != expected {
            return Err(AnnotationError::WrongStatus {
                id: id.into(),
                actual: rec.status.name(),
                expected: expected.name(),
            });
        }
        f(&mut rec)?;
        rec.version += 1;
        rec.updated_at = Utc::now();
        self.put(rec)
            .map_err(|e| AnnotationError::Storage(e.to_string()))?;
        Ok(&self.records[i])
    }

    /// Raw to annotated: the corrected sentence replaces the current one,
    /// which moves into history.
    pub fn submit_annotation(
        &mut self,
        id: &str,
        corrected_nl: &str,
        annotator: &str,
        version: u64,
    ) -> Result<&DatasetRecord, AnnotationError> {
        if annotator.trim().is_empty() {
            return Err(AnnotationError::Empty("annotator"));
        }
        if corrected_nl.trim().is_empty() {
            return Err(AnnotationError::Empty("sentence"));
        }
        self.mutate(id, version, Status::Raw, |rec| {
            let formula = rec
                .formula()
                .map_err(|e| AnnotationError::Storage(e.to_string()))?;
            let in_stl: Vec<u32> = formula.placeholders().into_iter().collect();
            let in_nl: Vec<u32> = sentence_placeholders(corrected_nl).into_iter().collect();
            if in_stl != in_nl {
                return Err(AnnotationError::PlaceholderMismatch {
                    sentence: in_nl,
                    formula: in_stl,
                });
            }
            rec.history.push(HistoryEntry {
                action: "annotate".into(),
                nl: std::mem::replace(&mut rec.lifted_nl, corrected_nl.to_string()),
                status: rec.status,
                actor: Some(annotator.to_string()),
                timestamp: Utc::now(),
            });
            rec.status = Status::Annotated;
            rec.annotator = Some(annotator.to_string());
            Ok(())
        })
    }

    /// Annotated to crosschecked or rejected, by someone other than the annotator.
    pub fn crosscheck(
        &mut self,
        id: &str,
        reviewer: &str,
        verdict: Verdict,
        version: u64,
    ) -> Result<&DatasetRecord, AnnotationError> {
        if reviewer.trim().is_empty() {
            return Err(AnnotationError::Empty("reviewer"));
        }
        if let Some(rec) = self.get(id) {
            if rec.status == Status::Annotated && rec.annotator.as_deref() == Some(reviewer) {
                return Err(AnnotationError::SelfReview {
                    reviewer: reviewer.into(),
                });
            }
        }
        self.mutate(id, version, Status::Annotated, |rec| {
            rec.history.push(HistoryEntry {
                action: match verdict {
                    Verdict::Accept => "crosscheck".into(),
                    Verdict::Reject => "reject".into(),
                },
                nl: rec.lifted_nl.clone(),
                status: rec.status,
                actor: Some(reviewer.to_string()),
                timestamp: Utc::now(),
            });
            rec.status = match verdict {
                Verdict::Accept => Status::Crosschecked,
                Verdict::Reject => Status::Rejected,
            };
            rec.reviewer = Some(reviewer.to_string());
            Ok(())
        })
    }
}

/// Seeded choice of a reviewer other than the annotator.
pub fn assign_reviewer<'a>(
    reviewers: &'a [String],
    annotator: &str,
    seed: u64,
    record_id: &str,
) -> Option<&'a String> {
    let candidates: Vec<&String> = reviewers.iter().filter(|r| r.as_str() != annotator).collect();
    let mix = record_id
        .bytes()
        .fold(seed, |h, b| h.rotate_left(5) ^ u64::from(b).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut rng = ChaCha8Rng::seed_from_u64(mix);
    candidates.choose(&mut rng).copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::record::Provenance;
    use crate::syntax::{parse, FormatSpec};

    const ROW1_STL: &str = "((prop_2 imply prop_3) equal finally[55,273] prop_1)";
    const ROW1_RAW: &str = "If (prop_2) implies (prop_3), then (prop_1) will happen at some point during the next 55 to 273 time units .";
    const ROW1_FIXED: &str = "If (prop_2) implies (prop_3), then (prop_1) will happen at some point during the next 55 to 273 time units, and vice versa .";

    fn store_with_row1() -> (tempfile::TempDir, DatasetStore) {
        let dir = tempfile::tempdir().unwrap();
        let mut store = DatasetStore::open(&dir.path().join("d.jsonl")).unwrap();
        let f = parse(ROW1_STL, FormatSpec::IN_WORD).unwrap();
        store
            .put(DatasetRecord::new("r1", "general", ROW1_RAW, &f, Provenance::Framework1))
            .unwrap();
        (dir, store)
    }

    #[test]
    fn annotate_then_crosscheck() {
        let (_d, mut store) = store_with_row1();
        let rec = store.submit_annotation("r1", ROW1_FIXED, "ann", 1).unwrap();
        assert_eq!(rec.status, Status::Annotated);
        assert_eq!(rec.version, 2);
        assert!(rec.lifted_nl.ends_with("and vice versa ."));
        assert_eq!(rec.history[0].nl, ROW1_RAW);

        assert!(matches!(
            store.crosscheck("r1", "ann", Verdict::Accept, 2),
            Err(AnnotationError::SelfReview { .. })
        ));
        let rec = store.crosscheck("r1", "rev", Verdict::Accept, 2).unwrap();
        assert_eq!(rec.status, Status::Crosschecked);
        assert_eq!(rec.version, 3);

        assert!(matches!(
            store.submit_annotation("r1", ROW1_FIXED, "ann", 3),
            Err(AnnotationError::WrongStatus { .. })
        ));

        let reopened = DatasetStore::open(store.path()).unwrap();
        assert_eq!(reopened.get("r1").unwrap(), store.get("r1").unwrap());
        assert_eq!(reopened.get("r1").unwrap().history.len(), 2);
    }

    #[test]
    fn reject_verdict() {
        let (_d, mut store) = store_with_row1();
        store.submit_annotation("r1", ROW1_FIXED, "ann", 1).unwrap();
        let rec = store.crosscheck("r1", "rev", Verdict::Reject, 2).unwrap();
        assert_eq!(rec.status, Status::Rejected);
    }

    #[test]
    fn stale_version_and_missing() {
        let (_d, mut store) = store_with_row1();
        store.submit_annotation("r1", ROW1_FIXED, "ann", 1).unwrap();
        assert_eq!(
            store.crosscheck("r1", "rev", Verdict::Accept, 1).unwrap_err(),
            AnnotationError::VersionConflict {
                supplied: 1,
                current: 2
            }
        );
        assert!(matches!(
            store.submit_annotation("nope", "x", "a", 1),
            Err(AnnotationError::NotFound { .. })
        ));
    }

    #[test]
    fn placeholder_mismatch() {
        let (_d, mut store) = store_with_row1();
        assert!(matches!(
            store.submit_annotation("r1", "only (prop_1) here .", "ann", 1),
            Err(AnnotationError::PlaceholderMismatch { .. })
        ));
    }

    #[test]
    fn reviewer_assignment() {
        let people: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        for i in 0..50 {
            let id = format!("r{i}");
            let r = assign_reviewer(&people, "b", 7, &id).unwrap();
            assert_ne!(r, "b");
            assert_eq!(assign_reviewer(&people, "b", 7, &id), Some(r));
        }
        assert_eq!(assign_reviewer(&people[..1], "a", 7, "r"), None);
    }
}
