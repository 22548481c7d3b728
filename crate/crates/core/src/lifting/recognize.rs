use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::convention::{format_ap, Convention};
use super::{ApEntry, ApMap, LiftError};
use crate::syntax::Lexicon;

/// Finds AP spans in a sentence.
pub trait ApRecognizer {
    fn recognize(&self, sentence: &str) -> Result<ApMap, LiftError>;
}

/// Word tokens with byte ranges. Punctuation is dropped, except `.`, `,` and
/// `-` between alphanumerics (`59.0`, `signal_1_n`, `x-ray`).
pub fn sentence_words(sentence: &str) -> Vec<(Range<usize>, &str)> {
    let chars: Vec<(usize, char)> = sentence.char_indices().collect();
    let is_core = |c: char| c.is_alphanumeric() || c == '_' || c == '\'';
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (k, &(i, c)) in chars.iter().enumerate() {
        let joiner = matches!(c, '.' | ',' | '-')
            && start.is_some()
            && chars.get(k + 1).is_some_and(|&(_, n)| n.is_alphanumeric())
            && chars[k - 1].1.is_alphanumeric();
        if is_core(c) || joiner {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            out.push((s..i, &sentence[s..i]));
        }
    }
    if let Some(s) = start {
        out.push((s..sentence.len(), &sentence[s..]));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DictEntry {
    pub phrase: String,
    /// Explicit formatted name; `None` means "apply the domain convention".
    pub name: Option<String>,
}

/// Parses a dictionary file: one `phrase => formatted name` per line (`→` or
/// a tab also separate), a bare phrase to use the domain convention, `#` for
/// comment lines.
pub fn parse_dictionary(text: &str) -> Vec<DictEntry> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            let split = ["=>", "→", "\t"]
                .iter()
                .find_map(|sep| line.split_once(sep));
            match split {
                Some((phrase, name)) => DictEntry {
                    phrase: phrase.trim().to_string(),
                    name: Some(name.trim().to_string()).filter(|n| !n.is_empty()),
                },
                None => DictEntry {
                    phrase: line.to_string(),
                    name: None,
                },
            }
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct ProfileFile {
    name: String,
    convention: Convention,
    #[serde(default)]
    dictionary: Option<PathBuf>,
    #[serde(default)]
    entries: Vec<String>,
}

/// A domain's formatting convention together with its phrase dictionary.
#[derive(Debug, Clone)]
pub struct DomainProfile {
    pub name: String,
    pub convention: Convention,
    pub entries: Vec<DictEntry>,
}

const BUILTIN: [(&str, &str, &str); 5] = [
    (
        "navigation",
        include_str!("../../data/domains/navigation.toml"),
        include_str!("../../data/domains/navigation.dict"),
    ),
    (
        "circuit",
        include_str!("../../data/domains/circuit.toml"),
        include_str!("../../data/domains/circuit.dict"),
    ),
    (
        "gltl",
        include_str!("../../data/domains/gltl.toml"),
        include_str!("../../data/domains/gltl.dict"),
    ),
    (
        "cw",
        include_str!("../../data/domains/cw.toml"),
        include_str!("../../data/domains/cw.dict"),
    ),
    (
        "office_email",
        include_str!("../../data/domains/office_email.toml"),
        include_str!("../../data/domains/office_email.dict"),
    ),
];

impl DomainProfile {
    pub fn builtin_names() -> Vec<&'static str> {
        BUILTIN.iter().map(|(n, _, _)| *n).collect()
    }

    /// Bundled profile for one of the fixture domains.
    pub fn builtin(name: &str) -> Option<DomainProfile> {
        let (_, toml_text, dict) = BUILTIN.iter().find(|(n, _, _)| *n == name)?;
        Some(Self::from_parts(toml_text, Some(dict)).expect("bundled profiles parse"))
    }

    fn from_parts(toml_text: &str, dict: Option<&str>) -> Result<DomainProfile, LiftError> {
        let file: ProfileFile =
            toml::from_str(toml_text).map_err(|e| LiftError::Profile(e.to_string()))?;
        let mut entries = parse_dictionary(&file.entries.join("\n"));
        if let Some(d) = dict {
            entries.extend(parse_dictionary(d));
        }
        Ok(DomainProfile {
            name: file.name,
            convention: file.convention,
            entries,
        })
    }

    /// Loads a `.toml` profile (its `dictionary` path is relative to the
    /// profile) or a bare dictionary file, which gets `identity_snake`.
    pub fn load(path: &Path) -> Result<DomainProfile, LiftError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p)
                .map_err(|e| LiftError::Profile(format!("{}: {e}", p.display())))
        };
        let text = read(path)?;
        if path.extension().is_some_and(|e| e == "toml") {
            let file: ProfileFile =
                toml::from_str(&text).map_err(|e| LiftError::Profile(e.to_string()))?;
            let dict = match &file.dictionary {
                Some(rel) => Some(read(&path.parent().unwrap_or(Path::new(".")).join(rel))?),
                None => None,
            };
            return Self::from_parts(&text, dict.as_deref());
        }
        Ok(DomainProfile {
            name: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            convention: Convention::IdentitySnake,
            entries: parse_dictionary(&text),
        })
    }

    /// Builtin name or filesystem path.
    pub fn resolve(spec: &str) -> Result<DomainProfile, LiftError> {
        match Self::builtin(spec) {
            Some(p) => Ok(p),
            None => Self::load(Path::new(spec)),
        }
    }

    pub fn formatted_name(&self, entry: &DictEntry) -> String {
        entry
            .name
            .clone()
            .unwrap_or_else(|| format_ap(&entry.phrase, &self.convention))
    }

    /// Formatted names as a lexicon for reading grounded formulas.
    pub fn lexicon(&self) -> Lexicon {
        Lexicon::new(self.entries.iter().map(|e| self.formatted_name(e)))
    }

    pub fn recognizer(&self) -> DictionaryRecognizer {
        DictionaryRecognizer::new(self)
    }
}

/// Longest-match phrase lookup over sentence words, case-insensitive.
#[derive(Debug, Clone)]
pub struct DictionaryRecognizer {
    // (lowercased phrase words, formatted name), longest first.
    phrases: Vec<(Vec<String>, String)>,
}

impl DictionaryRecognizer {
    pub fn new(profile: &DomainProfile) -> Self {
        let mut phrases: Vec<(Vec<String>, String)> = profile
            .entries
            .iter()
            .map(|e| {
                let words = sentence_words(&e.phrase)
                    .into_iter()
                    .map(|(_, w)| w.to_lowercase())
                    .collect();
                (words, profile.formatted_name(e))
            })
            .filter(|(w, _): &(Vec<String>, String)| !w.is_empty())
            .collect();
        phrases.sort_by_key(|p| std::cmp::Reverse(p.0.len()));
        DictionaryRecognizer { phrases }
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, String)>>(pairs: I) -> Self {
        let profile = DomainProfile {
            name: String::new(),
            convention: Convention::Raw,
            entries: pairs
                .into_iter()
                .map(|(phrase, name)| DictEntry {
                    phrase,
                    name: Some(name),
                })
                .collect(),
        };
        Self::new(&profile)
    }

    /// Non-overlapping matches as (byte range, formatted name), left to right.
    pub fn find_spans(&self, sentence: &str) -> Vec<(Range<usize>, String)> {
        let words = sentence_words(sentence);
        let mut out = Vec::new();
        let mut i = 0;
        while i < words.len() {
            let hit = self.phrases.iter().find(|(p, _)| {
                p.len() <= words.len() - i
                    && p
                        .iter()
                        .zip(&words[i..])
                        .all(|(a, (_, b))| a.as_str() == b.to_lowercase())
            });
            match hit {
                Some((p, name)) => {
                    let range = words[i].0.start..words[i + p.len() - 1].0.end;
                    out.push((range, name.clone()));
                    i += p.len();
                }
                None => i += 1,
            }
        }
        out
    }
}

impl ApRecognizer for DictionaryRecognizer {
    fn recognize(&self, sentence: &str) -> Result<ApMap, LiftError> {
        ApMap::from_spans(sentence, self.find_spans(sentence))
    }
}

impl ApMap {
    /// Groups spans by surface text (case-insensitive); indices follow first
    /// occurrence in the sentence.
    pub fn from_spans(
        sentence: &str,
        mut spans: Vec<(Range<usize>, String)>,
    ) -> Result<ApMap, LiftError> {
        spans.sort_by_key(|(r, _)| (r.start, r.end));
        for pair in spans.windows(2) {
            if pair[0].0.end > pair[1].0.start {
                return Err(LiftError::OverlappingSpans {
                    first: sentence[pair[0].0.clone()].to_string(),
                    second: sentence[pair[1].0.clone()].to_string(),
                });
            }
        }
        let mut entries: Vec<ApEntry> = Vec::new();
        for (range, name) in spans {
            let text = &sentence[range.clone()];
            let key = normalize_span(text);
            match entries.iter_mut().find(|e| normalize_span(&e.span) == key) {
                Some(e) => e.ranges.push((range.start, range.end)),
                None => entries.push(ApEntry {
                    index: entries.len() as u32 + 1,
                    span: text.to_string(),
                    name,
                    ranges: vec![(range.start, range.end)],
                }),
            }
        }
        Ok(ApMap { entries })
    }

    /// Locates each span text in the sentence (all whole-word occurrences)
    /// and formats it. Used for recognizers that return bare span strings.
    pub fn locate_spans(
        sentence: &str,
        spans: &[String],
        convention: &Convention,
    ) -> Result<ApMap, LiftError> {
        let mut found = Vec::new();
        for span in spans {
            let pairs = [(span.clone(), format_ap(span, convention))];
            let matcher = DictionaryRecognizer::from_pairs(pairs);
            let hits = matcher.find_spans(sentence);
            if hits.is_empty() {
                return Err(LiftError::SpanNotFound(span.clone()));
            }
            found.extend(hits);
        }
        Self::from_spans(sentence, found)
    }
}

pub(crate) fn normalize_span(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}
