//! Lifting and grounding: hiding atomic propositions behind `prop_i`
//! placeholders in both the sentence and the formula, and restoring them.

mod convention;
mod recognize;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stl::{normalize_payload, Atom, Formula};

pub use convention::{format_ap, Convention};
pub use recognize::{
    parse_dictionary, sentence_words, ApRecognizer, DictEntry, DictionaryRecognizer,
    DomainProfile,
};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LiftError {
    #[error("formula atom `{payload}` has no AP map entry")]
    UnmappedAtom { payload: String },
    #[error("formula atom `{payload}` matches more than one AP map entry")]
    AmbiguousAtom { payload: String },
    #[error("AP map entry prop_{index} (`{name}`) is not used by the formula")]
    UnusedEntry { index: u32, name: String },
    #[error("inconsistent AP map: {0}")]
    InconsistentMap(String),
    #[error("no AP map entry for prop_{0}")]
    MissingPlaceholder(u32),
    #[error("AP map entry prop_{0} does not occur in the lifted pair")]
    ExtraPlaceholder(u32),
    #[error("recognizer unavailable: {0}")]
    RecognizerUnavailable(String),
    #[error("recognizer returned overlapping spans `{first}` and `{second}`")]
    OverlappingSpans { first: String, second: String },
    #[error("span `{0}` not found in sentence")]
    SpanNotFound(String),
    #[error("domain profile: {0}")]
    Profile(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApEntry {
    pub index: u32,
    /// Surface text as it appears in the sentence.
    pub span: String,
    /// Formatted AP name, i.e. the grounded atom payload.
    pub name: String,
    /// Byte ranges of every occurrence in the full sentence.
    #[serde(default)]
    pub ranges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ApMap {
    pub entries: Vec<ApEntry>,
}

impl ApMap {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: u32) -> Option<&ApEntry> {
        self.entries.iter().find(|e| e.index == index)
    }

    /// One entry per distinct grounded payload, numbered by first occurrence
    /// in the formula. Spans are the payloads themselves and no ranges are set.
    pub fn from_formula(f: &Formula) -> ApMap {
        let mut entries: Vec<ApEntry> = Vec::new();
        for atom in f.atoms() {
            if let Atom::Grounded(p) = atom {
                let key = normalize_payload(p);
                if !entries.iter().any(|e| normalize_payload(&e.name) == key) {
                    entries.push(ApEntry {
                        index: entries.len() as u32 + 1,
                        span: p.clone(),
                        name: p.clone(),
                        ranges: Vec::new(),
                    });
                }
            }
        }
        ApMap { entries }
    }

    /// Same entries, renumbered by first occurrence of their name in `f`.
    /// Entries the formula does not use keep their relative order at the end.
    pub fn renumbered_by_formula(&self, f: &Formula) -> ApMap {
        let order: Vec<String> = ApMap::from_formula(f)
            .entries
            .into_iter()
            .map(|e| normalize_payload(&e.name))
            .collect();
        let rank = |e: &ApEntry| {
            let key = normalize_payload(&e.name);
            order.iter().position(|k| *k == key).unwrap_or(usize::MAX)
        };
        let mut entries = self.entries.clone();
        entries.sort_by_key(|e| (rank(e), e.index));
        for (i, e) in entries.iter_mut().enumerate() {
            e.index = i as u32 + 1;
        }
        ApMap { entries }
    }

    /// Indices are exactly 1..k and ranges do not overlap.
    pub fn check(&self) -> Result<(), LiftError> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if e.index == 0 || !seen.insert(e.index) {
                return Err(LiftError::InconsistentMap(format!(
                    "duplicate or zero index {}",
                    e.index
                )));
            }
        }
        if seen.last().copied().unwrap_or(0) as usize != self.entries.len() {
            return Err(LiftError::InconsistentMap("indices are not 1..k".into()));
        }
        let mut ranges: Vec<(usize, usize, &str)> = self
            .entries
            .iter()
            .flat_map(|e| e.ranges.iter().map(move |&(a, b)| (a, b, e.span.as_str())))
            .collect();
        ranges.sort();
        for w in ranges.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(LiftError::OverlappingSpans {
                    first: w[0].2.to_string(),
                    second: w[1].2.to_string(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedPair {
    pub nl: String,
    pub stl: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullPair {
    pub nl: String,
    pub stl: Formula,
    pub ap_map: ApMap,
}

pub fn recognize_aps(sentence: &str, recognizer: &dyn ApRecognizer) -> Result<ApMap, LiftError> {
    let map = recognizer.recognize(sentence)?;
    map.check()?;
    Ok(map)
}

pub fn placeholder_marker(index: u32) -> String {
    format!("(prop_{index})")
}

fn marker_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\(\s*prop_(\d+)\s*\)").expect("valid regex"))
}

/// Placeholder indices referenced by `(prop_i)` markers in a lifted sentence.
pub fn sentence_placeholders(nl: &str) -> BTreeSet<u32> {
    marker_regex()
        .captures_iter(nl)
        .filter_map(|c| c[1].parse().ok())
        .collect()
}

/// Masks every mapped AP in the formula and the sentence.
pub fn lift(pair: &FullPair) -> Result<LiftedPair, LiftError> {
    let map = &pair.ap_map;
    map.check()?;
    if map.is_empty() {
        if let Some(Atom::Grounded(p)) = pair.stl.atoms().find(|a| a.placeholder_index().is_none()) {
            return Err(LiftError::UnmappedAtom { payload: p.clone() });
        }
        return Ok(LiftedPair {
            nl: pair.nl.clone(),
            stl: pair.stl.clone(),
        });
    }

    let keys: Vec<String> = map.entries.iter().map(|e| normalize_payload(&e.name)).collect();
    let mut failure = None;
    let mut used = BTreeSet::new();
    let stl = pair.stl.clone().map_bottom_up(&mut |node| {
        let Formula::Atom(atom) = &node else {
            return node;
        };
        let payload = match atom {
            Atom::Grounded(p) => p,
            Atom::Placeholder(i) => {
                failure.get_or_insert(LiftError::InconsistentMap(format!(
                    "formula already contains prop_{i}"
                )));
                return node;
            }
        };
        let key = normalize_payload(payload);
        let hits: Vec<usize> = (0..keys.len()).filter(|&k| keys[k] == key).collect();
        match hits.as_slice() {
            [k] => {
                let index = map.entries[*k].index;
                used.insert(index);
                Formula::Atom(Atom::Placeholder(index))
            }
            [] => {
                failure.get_or_insert(LiftError::UnmappedAtom {
                    payload: payload.clone(),
                });
                node
            }
            _ => {
                failure.get_or_insert(LiftError::AmbiguousAtom {
                    payload: payload.clone(),
                });
                node
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if let Some(e) = map.entries.iter().find(|e| !used.contains(&e.index)) {
        return Err(LiftError::UnusedEntry {
            index: e.index,
            name: e.name.clone(),
        });
    }

    let mut cuts: Vec<(usize, usize, u32)> = map
        .entries
        .iter()
        .flat_map(|e| e.ranges.iter().map(move |&(a, b)| (a, b, e.index)))
        .collect();
    cuts.sort();
    let mut nl = String::with_capacity(pair.nl.len());
    let mut at = 0;
    for (a, b, index) in cuts {
        if b > pair.nl.len() || !pair.nl.is_char_boundary(a) || !pair.nl.is_char_boundary(b) {
            return Err(LiftError::InconsistentMap(format!(
                "range {a}..{b} outside the sentence"
            )));
        }
        nl.push_str(&pair.nl[at..a]);
        nl.push_str(&placeholder_marker(index));
        at = b;
    }
    nl.push_str(&pair.nl[at..]);

    let mentioned = sentence_placeholders(&nl);
    if let Some(e) = map.entries.iter().find(|e| !mentioned.contains(&e.index)) {
        return Err(LiftError::InconsistentMap(format!(
            "prop_{} (`{}`) has no span in the sentence",
            e.index, e.span
        )));
    }
    Ok(LiftedPair { nl, stl })
}

/// Restores formatted APs in the formula and surface spans in the sentence.
pub fn ground(lifted: &LiftedPair, map: &ApMap) -> Result<FullPair, LiftError> {
    let in_formula = lifted.stl.placeholders();
    let in_sentence = sentence_placeholders(&lifted.nl);
    for &i in in_formula.union(&in_sentence) {
        if map.get(i).is_none() {
            return Err(LiftError::MissingPlaceholder(i));
        }
    }
    if let Some(e) = map.entries.iter().find(|e| !in_formula.contains(&e.index)) {
        return Err(LiftError::ExtraPlaceholder(e.index));
    }

    let stl = lifted.stl.clone().map_bottom_up(&mut |node| match &node {
        Formula::Atom(Atom::Placeholder(i)) => {
            Formula::Atom(Atom::Grounded(map.get(*i).expect("checked").name.clone()))
        }
        _ => node,
    });

    let mut nl = String::with_capacity(lifted.nl.len());
    let mut ranges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); map.len()];
    let mut at = 0;
    for caps in marker_regex().captures_iter(&lifted.nl) {
        let whole = caps.get(0).expect("group 0");
        let index: u32 = caps[1].parse().expect("digits");
        let pos = map.entries.iter().position(|e| e.index == index).expect("checked");
        let entry = &map.entries[pos];
        let text = if entry.span.is_empty() {
            &entry.name
        } else {
            &entry.span
        };
        nl.push_str(&lifted.nl[at..whole.start()]);
        ranges[pos].push((nl.len(), nl.len() + text.len()));
        nl.push_str(text);
        at = whole.end();
    }
    nl.push_str(&lifted.nl[at..]);

    let entries = map
        .entries
        .iter()
        .zip(ranges)
        .map(|(e, r)| ApEntry {
            ranges: r,
            ..e.clone()
        })
        .collect();
    Ok(FullPair {
        nl,
        stl,
        ap_map: ApMap { entries },
    })
}
