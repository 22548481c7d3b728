use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::record::{DatasetRecord, Provenance};
use super::normalize_nl;
use crate::llm::{translate, ExamplePool, Gateway, PromptSpec, Task, Translation};
use crate::stl::{tree_equal, Formula};
use crate::synthesis::{shard_seed, BatchReport, SynthConfig, SynthError, Synthesizer};
use crate::syntax::{linearize, FormatSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Framework {
    #[serde(rename = "framework1")]
    One,
    #[serde(rename = "framework2")]
    Two,
}

impl Framework {
    fn provenance(self) -> Provenance {
        match self {
            Framework::One => Provenance::Framework1,
            Framework::Two => Provenance::Framework2,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Framework::One => "f1",
            Framework::Two => "f2",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub requested: usize,
    pub produced: usize,
    /// Framework2 back-translations that did not yield a lifted formula.
    pub parse_failed: usize,
    /// Iterations with no acceptable formula within the resample budget.
    pub sanity_rejected: usize,
    pub deduped: usize,
    pub backend_failed: usize,
    /// Candidates regenerated after a sanity rule fired (informational).
    pub resamples: usize,
}

impl Counts {
    pub fn reconciles(&self) -> bool {
        self.requested
            == self.produced
                + self.parse_failed
                + self.sanity_rejected
                + self.deduped
                + self.backend_failed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedItem {
    pub index: usize,
    pub reason: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub framework: Framework,
    pub synth_config: SynthConfig,
    pub stl_to_nl: PromptSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nl_to_stl: Option<PromptSpec>,
    pub backend: String,
    pub pool_source: String,
    pub counts: Counts,
    pub drops: Vec<DroppedItem>,
    pub started_at: DateTime<Utc>,
    pub wall_time_ms: u128,
}

#[derive(Debug, Clone)]
pub struct GenOptions {
    pub domain: String,
    pub dedup: bool,
    /// Worker threads; 0 means the gateway's in-flight limit.
    pub workers: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            domain: "general".into(),
            dedup: true,
            workers: 0,
        }
    }
}

/// Everything a generation run needs besides the iteration count.
pub struct Generator<'a> {
    pub gateway: &'a Gateway,
    pub pool: &'a ExamplePool,
    pub synth: SynthConfig,
    pub stl_to_nl: PromptSpec,
    pub nl_to_stl: PromptSpec,
    pub options: GenOptions,
}

enum Outcome {
    Record(Box<DatasetRecord>),
    Dropped(&'static str, String),
}

impl<'a> Generator<'a> {
    pub fn new(gateway: &'a Gateway, pool: &'a ExamplePool, synth: SynthConfig) -> Self {
        Generator {
            gateway,
            pool,
            stl_to_nl: PromptSpec::new(Task::StlToNl).with_seed(synth.seed),
            nl_to_stl: PromptSpec::new(Task::NlToStl).with_seed(synth.seed),
            synth,
            options: GenOptions::default(),
        }
    }

    pub fn run(&self, framework: Framework, n: usize) -> Result<(Vec<DatasetRecord>, RunManifest), SynthError> {
        let started_at = Utc::now();
        let clock = Instant::now();
        let mut counts = Counts {
            requested: n,
            ..Counts::default()
        };
        let mut drops = Vec::new();

        let mut synth = Synthesizer::new(self.synth.clone())?;
        let mut report = BatchReport::default();
        let mut formulas: Vec<Option<Formula>> = Vec::with_capacity(n);
        for index in 0..n {
            match synth.next_formula(&mut report) {
                Ok(f) => formulas.push(Some(f)),
                Err(e) => {
                    counts.sanity_rejected += 1;
                    drops.push(DroppedItem {
                        index,
                        reason: "sanity_rejected".into(),
                        detail: e.to_string(),
                    });
                    formulas.push(None);
                }
            }
        }
        counts.resamples = report.rejections;

        let outcomes = self.translate_all(framework, &formulas);
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (index, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                None => {}
                Some(Outcome::Record(r)) => {
                    let key = (normalize_nl(&r.lifted_nl), r.lifted_stl.pre_order_symbol.clone());
                    if self.options.dedup && !seen.insert(key) {
                        counts.deduped += 1;
                        drops.push(DroppedItem {
                            index,
                            reason: "deduped".into(),
                            detail: r.lifted_nl,
                        });
                    } else {
                        records.push(*r);
                    }
                }
                Some(Outcome::Dropped(reason, detail)) => {
                    match reason {
                        "parse_failed" => counts.parse_failed += 1,
                        _ => counts.backend_failed += 1,
                    }
                    drops.push(DroppedItem {
                        index,
                        reason: reason.into(),
                        detail,
                    });
                }
            }
        }
        counts.produced = records.len();
        drops.sort_by_key(|d| d.index);

        let manifest = RunManifest {
            framework,
            synth_config: self.synth.clone(),
            stl_to_nl: self.stl_to_nl,
            nl_to_stl: (framework == Framework::Two).then_some(self.nl_to_stl),
            backend: self.gateway.fingerprint(),
            pool_source: self.pool.source.clone(),
            counts,
            drops,
            started_at,
            wall_time_ms: clock.elapsed().as_millis(),
        };
        Ok((records, manifest))
    }

    fn translate_all(&self, framework: Framework, formulas: &[Option<Formula>]) -> Vec<Option<Outcome>> {
        let workers = match self.options.workers {
            0 => self.gateway.config().max_in_flight,
            w => w,
        }
        .clamp(1, formulas.len().max(1));
        let slots: Vec<Mutex<Option<Outcome>>> = formulas.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(slot) = formulas.get(i) else { break };
                    if let Some(f) = slot {
                        let out = self.one(framework, i, f);
                        *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(out);
                    }
                });
            }
        });
        slots
            .into_iter()
            .map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()))
            .collect()
    }

    fn one(&self, framework: Framework, index: usize, stl1: &Formula) -> Outcome {
        let to_nl = self.stl_to_nl.with_seed(shard_seed(self.stl_to_nl.seed, index));
        let query = linearize(stl1, to_nl.format);
        let nl1 = match translate(self.gateway, self.pool, &to_nl, &query) {
            Ok(t) => t.raw().to_string(),
            Err(e) => return Outcome::Dropped("backend_failed", e.to_string()),
        };
        let id = format!("{}-{:x}-{:06}", framework.tag(), self.synth.seed, index);
        let provenance = framework.provenance();
        match framework {
            Framework::One => Outcome::Record(Box::new(DatasetRecord::new(
                id,
                &self.options.domain,
                nl1,
                stl1,
                provenance,
            ))),
            Framework::Two => {
                let to_stl = self.nl_to_stl.with_seed(shard_seed(self.nl_to_stl.seed, index));
                match translate(self.gateway, self.pool, &to_stl, &nl1) {
                    Err(e) => Outcome::Dropped("backend_failed", e.to_string()),
                    Ok(Translation::Formula { formula, repaired, .. }) => {
                        let mut rec =
                            DatasetRecord::new(id, &self.options.domain, nl1, &formula, provenance);
                        rec.metadata.high_agreement = Some(tree_equal(stl1, &formula));
                        rec.metadata.source_stl = Some(linearize(stl1, FormatSpec::IN_WORD));
                        if repaired {
                            rec.metadata.parse_note = Some("back-translation repaired".into());
                        }
                        Outcome::Record(Box::new(rec))
                    }
                    Ok(Translation::Unparsed(f)) => {
                        Outcome::Dropped("parse_failed", format!("{}: {:?}", f.message, f.raw))
                    }
                    Ok(Translation::Text(t)) => Outcome::Dropped("parse_failed", t),
                }
            }
        }
    }
}

pub fn run_framework1(
    n: usize,
    synth: &SynthConfig,
    spec: &PromptSpec,
    pool: &ExamplePool,
    gateway: &Gateway,
) -> Result<(Vec<DatasetRecord>, RunManifest), SynthError> {
    let mut g = Generator::new(gateway, pool, synth.clone());
    g.stl_to_nl = *spec;
    g.run(Framework::One, n)
}

pub fn run_framework2(
    n: usize,
    synth: &SynthConfig,
    to_nl: &PromptSpec,
    to_stl: &PromptSpec,
    pool: &ExamplePool,
    gateway: &Gateway,
) -> Result<(Vec<DatasetRecord>, RunManifest), SynthError> {
    let mut g = Generator::new(gateway, pool, synth.clone());
    g.stl_to_nl = *to_nl;
    g.nl_to_stl = *to_stl;
    g.run(Framework::Two, n)
}
