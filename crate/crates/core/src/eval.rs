//! Binary accuracy and corpus statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stl::{first_divergence, Formula, Path};
use crate::syntax::{parse, repair, FormatSpec, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("gold formula does not parse: {0}")]
    GoldUnparseable(ParseError),
    #[error("nothing to evaluate")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Match,
    Mismatch,
    ParseFailure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub correct: bool,
    pub reason: Reason,
    /// First node where prediction and gold differ.
    pub divergence: Option<Path>,
    /// Prediction only parsed after repair.
    pub repaired: bool,
}

/// Scores a prediction against gold: correct iff both parse to the same tree.
pub fn score(pred: &str, gold: &str, fmt: FormatSpec) -> Result<Verdict, EvalError> {
    let gold = parse(gold, fmt).map_err(EvalError::GoldUnparseable)?;
    Ok(score_against(pred, &gold, fmt))
}

pub fn score_against(pred: &str, gold: &Formula, fmt: FormatSpec) -> Verdict {
    let Ok(fixed) = repair(pred, fmt) else {
        return Verdict {
            correct: false,
            reason: Reason::ParseFailure,
            divergence: None,
            repaired: false,
        };
    };
    let divergence = first_divergence(&fixed.formula, gold);
    Verdict {
        correct: divergence.is_none(),
        reason: if divergence.is_none() {
            Reason::Match
        } else {
            Reason::Mismatch
        },
        divergence,
        repaired: fixed.repaired,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct EvalPair {
    pub pred: String,
    pub gold: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Bucket {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub format: String,
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub verdicts: Vec<Verdict>,
    /// Keyed by the gold formula's AP count.
    pub by_ap_count: BTreeMap<usize, Bucket>,
}

pub fn evaluate(pairs: &[EvalPair], fmt: FormatSpec) -> Result<EvalReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut verdicts = Vec::with_capacity(pairs.len());
    let mut by_ap_count: BTreeMap<usize, Bucket> = BTreeMap::new();
    for pair in pairs {
        let gold = parse(&pair.gold, fmt).map_err(EvalError::GoldUnparseable)?;
        let v = score_against(&pair.pred, &gold, fmt);
        let bucket = by_ap_count.entry(gold.ap_count()).or_default();
        bucket.total += 1;
        bucket.correct += usize::from(v.correct);
        verdicts.push(v);
    }
    for b in by_ap_count.values_mut() {
        b.accuracy = b.correct as f64 / b.total as f64;
    }
    let correct = verdicts.iter().filter(|v| v.correct).count();
    Ok(EvalReport {
        format: fmt.name().to_string(),
        total: pairs.len(),
        correct,
        accuracy: correct as f64 / pairs.len() as f64,
        verdicts,
        by_ap_count,
    })
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>8} {:>8} {:>9}", "ap_count", "total", "correct", "accuracy");
        for (k, b) in &self.by_ap_count {
            let _ = writeln!(out, "{:<10} {:>8} {:>8} {:>9.4}", k, b.total, b.correct, b.accuracy);
        }
        let _ = writeln!(
            out,
            "{:<10} {:>8} {:>8} {:>9.4}",
            "all", self.total, self.correct, self.accuracy
        );
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("ap_count,total,correct,accuracy\n");
        for (k, b) in &self.by_ap_count {
            let _ = writeln!(out, "{k},{},{},{:.6}", b.total, b.correct, b.accuracy);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub avg: f64,
    pub median: f64,
    pub max: usize,
    pub min: usize,
}

impl Summary {
    fn of(mut values: Vec<usize>) -> Summary {
        if values.is_empty() {
            return Summary {
                avg: 0.0,
                median: 0.0,
                max: 0,
                min: 0,
            };
        }
        values.sort_unstable();
        let n = values.len();
        let median = if n % 2 == 1 {
            values[n / 2] as f64
        } else {
            (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0
        };
        Summary {
            avg: values.iter().sum::<usize>() as f64 / n as f64,
            median,
            max: values[n - 1],
            min: values[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub records: usize,
    pub aps_per_formula: Summary,
    pub operators_per_formula: Summary,
    pub sentence_count: usize,
    pub unique_sentences: usize,
    pub vocabulary: usize,
    pub words_per_sentence: Summary,
}

/// Lowercased whitespace tokens; punctuation tokens count as words.
pub fn sentence_tokens(nl: &str) -> impl Iterator<Item = String> + '_ {
    nl.split_whitespace().map(str::to_lowercase)
}

pub fn corpus_stats<'a, I>(records: I) -> CorpusStats
where
    I: IntoIterator<Item = (&'a str, &'a Formula)>,
{
    let mut aps = Vec::new();
    let mut ops = Vec::new();
    let mut words = Vec::new();
    let mut vocab = BTreeSet::new();
    let mut sentences = BTreeSet::new();
    for (nl, stl) in records {
        aps.push(stl.ap_count());
        ops.push(stl.op_count());
        let mut n = 0;
        for t in sentence_tokens(nl) {
            vocab.insert(t);
            n += 1;
        }
        words.push(n);
        sentences.insert(nl.split_whitespace().collect::<Vec<_>>().join(" "));
    }
    CorpusStats {
        records: aps.len(),
        sentence_count: aps.len(),
        unique_sentences: sentences.len(),
        aps_per_formula: Summary::of(aps),
        operators_per_formula: Summary::of(ops),
        vocabulary: vocab.len(),
        words_per_sentence: Summary::of(words),
    }
}

impl CorpusStats {
    pub fn to_table(&self) -> String {
        let row = |name: &str, s: &Summary| {
            format!(
                "{name:<22} {:>9.3} {:>7} {:>5} {:>5}\n",
                s.avg, s.median, s.max, s.min
            )
        };
        let mut out = format!("{:<22} {:>9} {:>7} {:>5} {:>5}\n", "", "avg", "median", "max", "min");
        out += &row("aps per formula", &self.aps_per_formula);
        out += &row("operators per formula", &self.operators_per_formula);
        out += &row("words per sentence", &self.words_per_sentence);
        let _ = writeln!(out, "sentences {}  unique {}  vocabulary {}", self.sentence_count, self.unique_sentences, self.vocabulary);
        out
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {message}")]
    Unreadable { path: String, message: String },
    #[error("record {record}: {message}")]
    BadRecord { record: usize, message: String },
}

const NL_KEYS: [&str; 5] = ["lifted_nl", "natural", "nl", "sentence", "raw_nl"];
const STL_KEYS: [&str; 6] = ["lifted_stl", "stl", "formula", "raw_ltl", "ltl", "logic_ltl"];

/// Parses a formula written in any of the four formats, or as a pre-order
/// list literal.
pub fn parse_any(text: &str) -> Result<Formula, ParseError> {
    let mut first = None;
    for fmt in [FormatSpec::PRE_SYMBOL, FormatSpec::IN_WORD, FormatSpec::PRE_WORD, FormatSpec::IN_SYMBOL] {
        match parse(text, fmt) {
            Ok(f) => return Ok(f),
            Err(e) => {
                first.get_or_insert(e);
            }
        }
    }
    Err(first.expect("at least one format tried"))
}

fn corpus_item(record: usize, v: &serde_json::Value) -> Result<(String, Formula), CorpusError> {
    let bad = |message: String| CorpusError::BadRecord { record, message };
    let nl = NL_KEYS
        .iter()
        .find_map(|k| v.get(*k).and_then(|x| x.as_str()))
        .ok_or_else(|| bad("no sentence field".into()))?;
    let stl_value = STL_KEYS
        .iter()
        .find_map(|k| v.get(*k))
        .ok_or_else(|| bad("no formula field".into()))?;
    let text = match stl_value {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Array(items) => items
            .iter()
            .map(|t| t.as_str().map(String::from).ok_or_else(|| bad("non-string token".into())))
            .collect::<Result<Vec<_>, _>>()?
            .join(" "),
        serde_json::Value::Object(o) => o
            .get("pre_order_symbol")
            .and_then(|x| x.as_str())
            .ok_or_else(|| bad("renderings lack pre_order_symbol".into()))?
            .to_string(),
        _ => return Err(bad("formula field is not text".into())),
    };
    let f = parse_any(&text).map_err(|e| bad(format!("{e}: {text}")))?;
    Ok((nl.to_string(), f))
}

/// Loads (sentence, formula) pairs from a JSONL file or a JSON array. Field
/// names are matched loosely so both this crate's records and other lifted
/// corpora load.
pub fn load_corpus(path: &std::path::Path) -> Result<Vec<(String, Formula)>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Unreadable {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if text.trim_start().starts_with('[') {
        let items: Vec<serde_json::Value> =
            serde_json::from_str(&text).map_err(|e| CorpusError::BadRecord {
                record: 0,
                message: e.to_string(),
            })?;
        return items.iter().enumerate().map(|(i, v)| corpus_item(i + 1, v)).collect();
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: serde_json::Value = serde_json::from_str(l).map_err(|e| CorpusError::BadRecord {
                record: i + 1,
                message: e.to_string(),
            })?;
            corpus_item(i + 1, &v)
        })
        .collect()
}
