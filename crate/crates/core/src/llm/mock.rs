use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::gateway::{BackendError, Completion, CompletionBackend};
use super::{CompletionRequest, Task};
use crate::stl::{Atom, Bound, Formula, Interval, OpKind};
use crate::syntax::{linearize, parse};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockEntry {
    pub task: Task,
    pub query: String,
    pub completion: String,
}

const BUNDLED: &str = include_str!("../../data/mock/canned.jsonl");

type Script = dyn Fn(&CompletionRequest) -> String + Send + Sync;

/// Offline backend.
///
/// Answers come from a canned table keyed by a hash of (task, query). Misses
/// fall back to a template verbalizer for `stl_to_nl`, which remembers each
/// sentence it produced so a later `nl_to_stl` on that sentence echoes the
/// original formula. `ap_detect` misses answer `none`.
pub struct MockBackend {
    canned: HashMap<String, String>,
    memory: Mutex<HashMap<String, Formula>>,
    script: Option<Box<Script>>,
    fingerprint: String,
}

fn key(task: Task, query: &str) -> String {
    let mut h = Sha256::new();
    h.update(task.name().as_bytes());
    h.update([0]);
    h.update(query.split_whitespace().collect::<Vec<_>>().join(" ").as_bytes());
    hex::encode(h.finalize())
}

impl MockBackend {
    pub fn with_entries(entries: Vec<MockEntry>) -> Self {
        let mut digest = Sha256::new();
        let mut canned = HashMap::new();
        for e in &entries {
            let k = key(e.task, &e.query);
            digest.update(k.as_bytes());
            digest.update(e.completion.as_bytes());
            canned.insert(k, e.completion.clone());
        }
        let table = hex::encode(digest.finalize());
        MockBackend {
            canned,
            memory: Mutex::new(HashMap::new()),
            script: None,
            fingerprint: format!("mock:template:{}", &table[..12]),
        }
    }

    pub fn parse_entries(jsonl: &str) -> Result<Vec<MockEntry>, serde_json::Error> {
        jsonl
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect()
    }

    /// Canned answers for the bundled fixtures.
    pub fn bundled() -> Self {
        Self::with_entries(Self::parse_entries(BUNDLED).expect("bundled mock table parses"))
    }

    /// Bundled table plus the entries of a JSONL file.
    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
        let mut entries = Self::parse_entries(BUNDLED).expect("bundled mock table parses");
        entries.extend(
            Self::parse_entries(&text).map_err(|e| BackendError::Config(e.to_string()))?,
        );
        Ok(Self::with_entries(entries))
    }

    /// Every request answered by `f`; canned entries are ignored.
    pub fn scripted(f: impl Fn(&CompletionRequest) -> String + Send + Sync + 'static) -> Self {
        MockBackend {
            canned: HashMap::new(),
            memory: Mutex::new(HashMap::new()),
            script: Some(Box::new(f)),
            fingerprint: "mock:scripted".into(),
        }
    }

    pub fn hash_key(task: Task, query: &str) -> String {
        key(task, query)
    }

    fn remember(&self, sentence: &str, f: Formula) {
        let mut m = self.memory.lock().unwrap_or_else(|e| e.into_inner());
        m.insert(normalize(sentence), f);
    }

    fn answer(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        if let Some(script) = &self.script {
            return Ok(script(request));
        }
        let canned = self.canned.get(&key(request.task, &request.query)).cloned();
        match request.task {
            Task::StlToNl => {
                let f = parse(&request.query, request.format)
                    .map_err(|e| BackendError::MalformedResponse(format!("query: {e}")))?;
                let sentence = canned.unwrap_or_else(|| verbalize(&f));
                self.remember(&sentence, f);
                Ok(sentence)
            }
            Task::NlToStl => {
                if let Some(c) = canned {
                    return Ok(c);
                }
                let m = self.memory.lock().unwrap_or_else(|e| e.into_inner());
                Ok(m.get(&normalize(&request.query))
                    .map(|f| linearize(f, request.format))
                    .unwrap_or_default())
            }
            Task::ApDetect => Ok(canned.unwrap_or_else(|| "none".into())),
        }
    }
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl CompletionBackend for MockBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, BackendError> {
        self.answer(request).map(Completion::text)
    }

    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }
}

fn window(i: &Interval) -> String {
    match i.upper {
        Bound::Finite(b) => format!("within {} to {} time units", i.lower, b),
        Bound::Infinite => format!("after {} time units", i.lower),
    }
}

fn phrase(f: &Formula) -> String {
    match f {
        Formula::Atom(Atom::Placeholder(i)) => format!("(prop_{i})"),
        Formula::Atom(Atom::Grounded(p)) => format!("({p})"),
        Formula::Node { op, children } => {
            let c = |k: usize| phrase(&children[k]);
            let w = op.interval.as_ref().map(window);
            match (op.kind, w) {
                (OpKind::Not, _) => format!("it is not the case that {}", c(0)),
                (OpKind::And, _) => format!("both {} and also {}", c(0), c(1)),
                (OpKind::Or, _) => format!("either {} or else {}", c(0), c(1)),
                (OpKind::Imply, _) => format!("if {} then {}", c(0), c(1)),
                (OpKind::Equal, _) => format!("it holds that {} exactly when {}", c(0), c(1)),
                (OpKind::Finally, None) => format!("eventually {}", c(0)),
                (OpKind::Finally, Some(w)) => format!("at some point {w} {}", c(0)),
                (OpKind::Globally, None) => format!("always {}", c(0)),
                (OpKind::Globally, Some(w)) => format!("at every moment {w} {}", c(0)),
                (OpKind::Until, None) => format!("keep {} until {}", c(0), c(1)),
                (OpKind::Until, Some(w)) => format!("keep {} until, {w}, {}", c(0), c(1)),
            }
        }
    }
}

/// Deterministic template sentence. Distinct formulas give distinct sentences.
pub fn verbalize(f: &Formula) -> String {
    let mut s = phrase(f);
    if let Some(first) = s.get(0..1) {
        let upper = first.to_uppercase();
        s.replace_range(0..1, &upper);
    }
    s.push_str(" .");
    s
}
