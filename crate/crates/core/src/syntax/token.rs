use std::ops::Range;

use crate::stl::{Atom, Bound, Interval, OpKind, Operator};

use super::{OpStyle, ParseError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Op(Operator),
    Atom(Atom),
    LParen,
    RParen,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    /// Index of the token in its sequence.
    pub position: usize,
    /// Byte range in the source text.
    pub span: Range<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSeq {
    pub tokens: Vec<Token>,
}

impl TokenSeq {
    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

const SYMBOL_OPS: [(&str, OpKind); 8] = [
    ("negation", OpKind::Not),
    ("&", OpKind::And),
    ("|", OpKind::Or),
    ("->", OpKind::Imply),
    ("<->", OpKind::Equal),
    ("F", OpKind::Finally),
    ("G", OpKind::Globally),
    ("U", OpKind::Until),
];

const WORD_OPS: [(&str, OpKind); 8] = [
    ("negation", OpKind::Not),
    ("and", OpKind::And),
    ("or", OpKind::Or),
    ("imply", OpKind::Imply),
    ("equal", OpKind::Equal),
    ("finally", OpKind::Finally),
    ("globally", OpKind::Globally),
    ("until", OpKind::Until),
];

pub(crate) fn op_kind(name: &str, style: OpStyle) -> Option<OpKind> {
    let table = match style {
        OpStyle::Symbol => &SYMBOL_OPS,
        OpStyle::Word => &WORD_OPS,
    };
    table.iter().find(|(n, _)| *n == name).map(|(_, k)| *k)
}

fn is_reserved(name: &str) -> bool {
    op_kind(name, OpStyle::Symbol).is_some() || op_kind(name, OpStyle::Word).is_some()
}

/// Parses `[a,b]` with `b` either an integer or `infinite`.
pub(crate) fn parse_interval(text: &str) -> Option<Interval> {
    let inner = text.strip_prefix('[')?.strip_suffix(']')?;
    let (lo, hi) = inner.split_once(',')?;
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(lo) {
        return None;
    }
    let lower = lo.parse().ok()?;
    let upper = match hi {
        "infinite" | "inf" => Bound::Infinite,
        h if digits(h) => Bound::Finite(h.parse().ok()?),
        _ => return None,
    };
    Some(Interval { lower, upper })
}

pub(crate) fn is_identifier(word: &str) -> bool {
    !word.is_empty()
        && word
            .chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '.')
}

pub(crate) fn placeholder(word: &str) -> Option<Option<u32>> {
    let digits = word.strip_prefix("prop_")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(digits.parse().ok().filter(|&i| i > 0))
}

fn classify(word: &str, style: OpStyle) -> Option<TokenKind> {
    if let Some(idx) = word.find('[') {
        let (name, rest) = word.split_at(idx);
        let kind = op_kind(name, style).filter(|k| k.is_temporal())?;
        let interval = parse_interval(rest)?;
        return Some(TokenKind::Op(Operator::timed(kind, interval)));
    }
    if let Some(kind) = op_kind(word, style) {
        return Some(TokenKind::Op(Operator::new(kind)));
    }
    if is_reserved(word) {
        return None;
    }
    if let Some(index) = placeholder(word) {
        return index.map(|i| TokenKind::Atom(Atom::Placeholder(i)));
    }
    is_identifier(word).then(|| TokenKind::Atom(Atom::Grounded(word.to_string())))
}

/// Splits text into tokens under the alphabet of `style`.
///
/// Parentheses are always tokens of their own. A quoted list literal such as
/// `['<->', 'prop_1', ...]` is unpacked item by item.
pub fn tokenize(text: &str, style: OpStyle) -> Result<TokenSeq, ParseError> {
    let raw = match list_literal_items(text) {
        Some(items) => items,
        None => split_words(text),
    };
    let mut tokens = Vec::with_capacity(raw.len());
    for (position, (span, word)) in raw.into_iter().enumerate() {
        let kind = match word {
            "(" => TokenKind::LParen,
            ")" => TokenKind::RParen,
            w => classify(w, style).ok_or_else(|| ParseError::UnknownToken {
                position,
                token: w.to_string(),
            })?,
        };
        tokens.push(Token {
            text: word.to_string(),
            kind,
            position,
            span,
        });
    }
    Ok(TokenSeq { tokens })
}

/// Whitespace-separated words with parentheses split off.
pub(crate) fn split_words(text: &str) -> Vec<(Range<usize>, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        let boundary = c.is_whitespace() || c == '(' || c == ')';
        if boundary {
            if let Some(s) = start.take() {
                out.push((s..i, &text[s..i]));
            }
            if c == '(' || c == ')' {
                out.push((i..i + 1, &text[i..i + 1]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s..text.len(), &text[s..]));
    }
    out
}

fn list_literal_items(text: &str) -> Option<Vec<(Range<usize>, &str)>> {
    let trimmed = text.trim();
    let offset = text.len() - text.trim_start().len();
    let body = trimmed.strip_prefix('[')?.strip_suffix(']')?;
    let body_start = offset + 1;
    let first = body.trim_start().chars().next();
    if !matches!(first, Some('\'' | '"') | None) {
        return None;
    }
    let mut items = Vec::new();
    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b' ' | b',' | b'\t' | b'\n' => i += 1,
            q @ (b'\'' | b'"') => {
                let start = i + 1;
                let end = start + body[start..].find(q as char)?;
                items.push((body_start + start..body_start + end, &body[start..end]));
                i = end + 1;
            }
            _ => return None,
        }
    }
    Some(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_cover_linearized_text() {
        let text = "((prop_2 imply prop_3) equal finally[55,273] prop_1)";
        let seq = tokenize(text, OpStyle::Word).unwrap();
        assert_eq!(
            seq.texts(),
            vec![
                "(", "(", "prop_2", "imply", "prop_3", ")", "equal",
                "finally[55,273]", "prop_1", ")"
            ]
        );
        for t in &seq.tokens {
            assert_eq!(&text[t.span.clone()], t.text);
        }
    }

    #[test]
    fn interval_forms() {
        assert_eq!(parse_interval("[0,34]"), Some(Interval::bounded(0, 34)));
        assert_eq!(parse_interval("[400,infinite]"), Some(Interval::unbounded(400)));
        assert_eq!(parse_interval("[1, 2]"), None);
        assert_eq!(parse_interval("[a,2]"), None);
        assert_eq!(parse_interval("[1,2"), None);
    }

    #[test]
    fn interval_only_on_temporal_operators() {
        assert!(tokenize("&[1,2]", OpStyle::Symbol).is_err());
        assert!(tokenize("U[1,2]", OpStyle::Symbol).is_ok());
        assert!(tokenize("until[1,2]", OpStyle::Symbol).is_err());
    }

    #[test]
    fn placeholders_start_at_one() {
        assert!(tokenize("prop_0", OpStyle::Word).is_err());
        let seq = tokenize("prop_12", OpStyle::Word).unwrap();
        assert_eq!(seq.tokens[0].kind, TokenKind::Atom(Atom::Placeholder(12)));
        // Non-numeric suffix is an ordinary identifier.
        let seq = tokenize("prop_x", OpStyle::Word).unwrap();
        assert_eq!(seq.tokens[0].kind, TokenKind::Atom(Atom::Grounded("prop_x".into())));
    }

    #[test]
    fn list_literal_with_double_quotes() {
        let seq = tokenize(r#"["G", "prop_1"]"#, OpStyle::Symbol).unwrap();
        assert_eq!(seq.texts(), vec!["G", "prop_1"]);
    }
}
