//! Few-shot prompts for the three completion tasks and the backends that
//! answer them.

mod gateway;
mod mock;
mod openai;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lifting::{ApMap, ApRecognizer, Convention, LiftError};
use crate::stl::Formula;
use crate::syntax::{repair, FormatSpec, ParseError};

pub use gateway::{
    BackendConfig, BackendError, Completion, CompletionBackend, Gateway, GatewayStats, Outcome,
    RetryPolicy,
};
pub use mock::{verbalize, MockBackend, MockEntry};
pub use openai::{HttpResponse, HttpTransport, OpenAiBackend, ReqwestTransport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    StlToNl,
    NlToStl,
    ApDetect,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::StlToNl => "stl_to_nl",
            Task::NlToStl => "nl_to_stl",
            Task::ApDetect => "ap_detect",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExamplePair {
    pub nl: String,
    pub stl: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApExample {
    pub sentence: String,
    pub aps: Vec<String>,
}

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("prompt pool needs {needed} examples, has {available}")]
    PoolTooSmall { needed: usize, available: usize },
    #[error("duplicate sentence in prompt pool: {0}")]
    DuplicateNl(String),
    #[error("pool example {index} does not parse as {format}: {error}")]
    BadExample {
        index: usize,
        format: String,
        error: ParseError,
    },
    #[error("unknown format `{0}`")]
    UnknownFormat(String),
    #[error("cannot read prompt pool: {0}")]
    Io(String),
    #[error("prompt spec needs k >= 1")]
    ZeroK,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PoolFile {
    #[serde(default)]
    source: String,
    format: String,
    pairs: Vec<ExamplePair>,
    #[serde(default)]
    ap_examples: Vec<ApExample>,
}

/// Example pairs whose STL side is in one fixed format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExamplePool {
    pub pairs: Vec<ExamplePair>,
    pub format: FormatSpec,
    pub source: String,
    pub ap_examples: Vec<ApExample>,
}

const BUNDLED_POOL: &str = include_str!("../../data/prompts/pool.json");

impl ExamplePool {
    pub fn new(
        pairs: Vec<ExamplePair>,
        format: FormatSpec,
        source: impl Into<String>,
        ap_examples: Vec<ApExample>,
    ) -> Result<Self, PoolError> {
        let mut seen = HashSet::new();
        for (index, p) in pairs.iter().enumerate() {
            if !seen.insert(p.nl.trim().to_string()) {
                return Err(PoolError::DuplicateNl(p.nl.clone()));
            }
            crate::syntax::parse(&p.stl, format).map_err(|error| PoolError::BadExample {
                index,
                format: format.name().into(),
                error,
            })?;
        }
        Ok(ExamplePool {
            pairs,
            format,
            source: source.into(),
            ap_examples,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, PoolError> {
        let file: PoolFile = serde_json::from_str(text).map_err(|e| PoolError::Io(e.to_string()))?;
        let format = file
            .format
            .parse()
            .map_err(|_| PoolError::UnknownFormat(file.format.clone()))?;
        Self::new(file.pairs, format, file.source, file.ap_examples)
    }

    pub fn load(path: &Path) -> Result<Self, PoolError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PoolError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Hand-written lifted pairs shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_POOL).expect("bundled pool is valid")
    }

    /// The same pool with its STL side re-rendered in `format`.
    pub fn in_format(&self, format: FormatSpec) -> Self {
        if format == self.format {
            return self.clone();
        }
        let pairs = self
            .pairs
            .iter()
            .map(|p| ExamplePair {
                nl: p.nl.clone(),
                stl: crate::syntax::convert(&p.stl, self.format, format).expect("validated"),
            })
            .collect();
        ExamplePool {
            pairs,
            format,
            source: self.source.clone(),
            ap_examples: self.ap_examples.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub task: Task,
    pub k: usize,
    /// Format of the STL side, both in the examples and in the answer.
    pub format: FormatSpec,
    pub seed: u64,
}

impl PromptSpec {
    pub fn new(task: Task) -> Self {
        PromptSpec {
            task,
            k: 20,
            format: match task {
                Task::NlToStl => FormatSpec::PRE_SYMBOL,
                _ => FormatSpec::IN_WORD,
            },
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        PromptSpec { seed, ..self }
    }
}

fn instruction(task: Task, format: FormatSpec) -> String {
    match task {
        Task::StlToNl => format!(
            "Translate each signal temporal logic formula ({}) into a natural English sentence.",
            format.name()
        ),
        Task::NlToStl => format!(
            "Translate each English sentence into a signal temporal logic formula ({}).",
            format.name()
        ),
        Task::ApDetect => {
            "List the atomic propositions mentioned in each sentence, separated by ' | '.".into()
        }
    }
}

/// Assembles a few-shot prompt: an instruction line, `k` examples sampled
/// without replacement, then the query with an empty answer slot.
pub fn build_prompt(pool: &ExamplePool, spec: &PromptSpec, query: &str) -> Result<String, PoolError> {
    if spec.k == 0 {
        return Err(PoolError::ZeroK);
    }
    let available = match spec.task {
        Task::ApDetect => pool.ap_examples.len(),
        _ => pool.pairs.len(),
    };
    if available < spec.k {
        return Err(PoolError::PoolTooSmall {
            needed: spec.k,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let picks = sample(&mut rng, available, spec.k);

    let mut out = instruction(spec.task, spec.format);
    out.push_str("\n\n");
    match spec.task {
        Task::ApDetect => {
            for i in picks.iter() {
                let ex = &pool.ap_examples[i];
                let _ = write!(out, "Sentence: {}\nAPs: {}\n\n", ex.sentence, ex.aps.join(" | "));
            }
            let _ = write!(out, "Sentence: {query}\nAPs:");
        }
        Task::StlToNl | Task::NlToStl => {
            let pool = pool.in_format(spec.format);
            for i in picks.iter() {
                let p = &pool.pairs[i];
                if spec.task == Task::StlToNl {
                    let _ = write!(out, "STL: {}\nNL: {}\n\n", p.stl, p.nl);
                } else {
                    let _ = write!(out, "NL: {}\nSTL: {}\n\n", p.nl, p.stl);
                }
            }
            let (q, cue) = if spec.task == Task::StlToNl {
                ("STL", "NL")
            } else {
                ("NL", "STL")
            };
            let _ = write!(out, "{q}: {query}\n{cue}:");
        }
    }
    Ok(out)
}

/// Number of example blocks in a prompt built by [`build_prompt`].
pub fn count_examples(prompt: &str, task: Task) -> usize {
    let head = match task {
        Task::StlToNl => "STL: ",
        Task::NlToStl => "NL: ",
        Task::ApDetect => "Sentence: ",
    };
    prompt.lines().filter(|l| l.starts_with(head)).count().saturating_sub(1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub task: Task,
    /// The item being translated, without examples.
    pub query: String,
    pub prompt: String,
    pub format: FormatSpec,
}

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseFailure {
    pub raw: String,
    pub message: String,
    pub position: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Translation {
    Text(String),
    Formula {
        raw: String,
        formula: Formula,
        repaired: bool,
    },
    /// `nl_to_stl` output that could not be turned into a lifted formula.
    Unparsed(ParseFailure),
}

impl Translation {
    pub fn raw(&self) -> &str {
        match self {
            Translation::Text(t) => t,
            Translation::Formula { raw, .. } => raw,
            Translation::Unparsed(f) => &f.raw,
        }
    }
}

/// Builds the prompt, completes it and post-processes the answer.
pub fn translate(
    gateway: &Gateway,
    pool: &ExamplePool,
    spec: &PromptSpec,
    input: &str,
) -> Result<Translation, TranslateError> {
    let prompt = build_prompt(pool, spec, input)?;
    let request = CompletionRequest {
        task: spec.task,
        query: input.to_string(),
        prompt,
        format: spec.format,
    };
    let text = gateway.complete(&request)?;
    let raw = first_line(&text).trim_end().to_string();
    if spec.task != Task::NlToStl {
        return Ok(Translation::Text(raw));
    }
    Ok(match repair(&raw, spec.format) {
        Ok(r) if r.formula.is_lifted() && crate::stl::validate(&r.formula).is_empty() => {
            Translation::Formula {
                raw,
                formula: r.formula,
                repaired: r.repaired,
            }
        }
        Ok(_) => Translation::Unparsed(ParseFailure {
            raw,
            message: "output is not a valid lifted formula".into(),
            position: None,
        }),
        Err(u) => Translation::Unparsed(ParseFailure {
            raw,
            message: u.error.to_string(),
            position: u.error.position(),
        }),
    })
}

fn first_line(text: &str) -> &str {
    let t = text.trim_start();
    t.lines().next().unwrap_or("")
}

/// AP recognition through a completion backend.
pub struct LlmRecognizer<'g> {
    pub gateway: &'g Gateway,
    pub pool: ExamplePool,
    pub spec: PromptSpec,
    pub convention: Convention,
}

/// Splits an AP-detection answer into spans. `none` or an empty answer means
/// no spans.
pub fn parse_ap_answer(answer: &str) -> Vec<String> {
    let line = first_line(answer).trim();
    if line.is_empty() || line.eq_ignore_ascii_case("none") {
        return Vec::new();
    }
    line.split('|')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

impl ApRecognizer for LlmRecognizer<'_> {
    fn recognize(&self, sentence: &str) -> Result<ApMap, LiftError> {
        let answer = translate(self.gateway, &self.pool, &self.spec, sentence)
            .map_err(|e| LiftError::RecognizerUnavailable(e.to_string()))?;
        let spans = parse_ap_answer(answer.raw());
        ApMap::locate_spans(sentence, &spans, &self.convention)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn bundled_pool_is_large_enough() {
        let pool = ExamplePool::bundled();
        assert!(pool.pairs.len() >= 20);
        assert_eq!(pool.format, FormatSpec::IN_WORD);
    }

    #[test]
    fn k_examples_then_query() {
        let pool = ExamplePool::bundled();
        let spec = PromptSpec {
            k: 2,
            ..PromptSpec::new(Task::StlToNl).with_seed(7)
        };
        let p = build_prompt(&pool, &spec, "globally prop_1").unwrap();
        assert_eq!(count_examples(&p, Task::StlToNl), 2);
        assert!(p.ends_with("STL: globally prop_1\nNL:"));
        assert_eq!(p, build_prompt(&pool, &spec, "globally prop_1").unwrap());
    }

    #[test]
    fn default_k_is_twenty() {
        let spec = PromptSpec::new(Task::NlToStl);
        assert_eq!(spec.k, 20);
        let p = build_prompt(&ExamplePool::bundled(), &spec, "always (prop_1) .").unwrap();
        assert_eq!(count_examples(&p, Task::NlToStl), 20);
        // Pre-order/symbol rendering on the answer side.
        for line in p.lines().filter_map(|l| l.strip_prefix("STL: ")) {
            crate::syntax::parse(line, FormatSpec::PRE_SYMBOL).unwrap();
        }
    }

    #[test]
    fn pool_too_small_and_duplicates() {
        let pool = ExamplePool::bundled();
        let spec = PromptSpec {
            k: 100,
            ..PromptSpec::new(Task::StlToNl)
        };
        assert!(matches!(
            build_prompt(&pool, &spec, "x"),
            Err(PoolError::PoolTooSmall { needed: 100, .. })
        ));
        let dup = vec![
            ExamplePair { nl: "a".into(), stl: "prop_1".into() },
            ExamplePair { nl: "a".into(), stl: "prop_2".into() },
        ];
        assert!(matches!(
            ExamplePool::new(dup, FormatSpec::IN_WORD, "t", vec![]),
            Err(PoolError::DuplicateNl(_))
        ));
    }

    #[test]
    fn ap_prompt_layout() {
        let pool = ExamplePool::bundled();
        let spec = PromptSpec {
            k: 3,
            ..PromptSpec::new(Task::ApDetect)
        };
        let p = build_prompt(&pool, &spec, "go to the door .").unwrap();
        assert_eq!(count_examples(&p, Task::ApDetect), 3);
        assert!(p.ends_with("Sentence: go to the door .\nAPs:"));
    }

    fn gateway_with(f: impl Fn(&CompletionRequest) -> String + Send + Sync + 'static) -> Gateway {
        Gateway::new(Arc::new(MockBackend::scripted(f)), BackendConfig::default())
    }

    #[test]
    fn nl_to_stl_repairs_missing_paren() {
        let gw = gateway_with(|_| "(prop_1 and (prop_2 or prop_3)".into());
        let spec = PromptSpec {
            format: FormatSpec::IN_WORD,
            ..PromptSpec::new(Task::NlToStl)
        };
        match translate(&gw, &ExamplePool::bundled(), &spec, "x").unwrap() {
            Translation::Formula { repaired, formula, .. } => {
                assert!(repaired);
                assert_eq!(formula.ap_count(), 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nl_to_stl_garbage_is_annotated() {
        let gw = gateway_with(|_| "garbage".into());
        let out = translate(&gw, &ExamplePool::bundled(), &PromptSpec::new(Task::NlToStl), "x").unwrap();
        assert!(matches!(out, Translation::Unparsed(ParseFailure { ref raw, .. }) if raw == "garbage"));
    }

    #[test]
    fn ap_answers() {
        assert_eq!(parse_ap_answer(" acquire pear | go to waste basket \n"), vec!["acquire pear", "go to waste basket"]);
        assert!(parse_ap_answer("none").is_empty());
        let gw = gateway_with(|_| "acquire pear | go to waste basket".into());
        let r = LlmRecognizer {
            gateway: &gw,
            pool: ExamplePool::bundled(),
            spec: PromptSpec { k: 3, ..PromptSpec::new(Task::ApDetect) },
            convention: Convention::verb_noun(),
        };
        let map = r.recognize("when possible acquire pear and repeatedly go to waste basket .").unwrap();
        assert_eq!(map.entries[1].name, "go_to_v waste_basket_n");
    }
}
