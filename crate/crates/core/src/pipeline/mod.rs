//! Dataset generation, ingestion, persistence and the annotation lifecycle.

mod generate;
mod ingest;
mod record;
mod store;

use std::collections::HashSet;

pub use generate::{
    run_framework1, run_framework2, Counts, DroppedItem, Framework, GenOptions, Generator,
    RunManifest,
};
pub use ingest::{ingest_full_pairs, ingest_row, FullRow, IngestError, IngestReport, QuarantineRow};
pub use record::{DatasetRecord, HistoryEntry, Metadata, Provenance, Renderings, Status};
pub use store::{
    assign_reviewer, read_records, write_records, AnnotationError, DatasetStore, StoreError,
    Verdict,
};

/// Lowercased sentence with whitespace runs collapsed.
pub fn normalize_nl(nl: &str) -> String {
    nl.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Drops records whose (normalized sentence, pre-order/symbol formula) pair
/// was already seen. Keeps the first occurrence and the input order.
pub fn dedup(records: Vec<DatasetRecord>) -> Vec<DatasetRecord> {
    let mut seen = HashSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert((normalize_nl(&r.lifted_nl), r.lifted_stl.pre_order_symbol.clone())))
        .collect()
}
