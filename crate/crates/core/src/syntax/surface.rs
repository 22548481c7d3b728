//! Lenient reader for grounded corpus formulas such as
//! `finally ( acquire_v pear_n ) and globally ( finally ( go_to_v waste_basket_n ) )`.
//!
//! Unlike [`super::parse`], atoms may span several words, parentheses may be
//! omitted, and a space may separate an operator from its interval
//! (`globally [0,34]`). Unparenthesized chains resolve by precedence, tightest
//! first: unary operators, `and`, `or`, `until`, `imply`, `equal`. `imply` is
//! right-associative; the rest associate to the left.
//!
//! Known multi-word atoms can be supplied as a [`Lexicon`] so that atoms
//! containing operator words (`sending me an SAP and Salesforce`) stay whole.
//! The comparison phrases `math equal`, `more equal` and `less equal` are
//! always read as part of an atom.

use crate::stl::{Atom, Formula, Operator};

use super::token::{op_kind, parse_interval, placeholder, split_words, Token, TokenKind};
use super::{check_balance, parse_pre_order, FormatSpec, OpStyle, Order, ParseError};

/// Multi-word atom payloads to keep intact while reading.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    phrases: Vec<Vec<String>>,
}

impl Lexicon {
    pub fn new<I, S>(phrases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut phrases: Vec<Vec<String>> = phrases
            .into_iter()
            .map(|p| {
                split_words(p.as_ref())
                    .into_iter()
                    .map(|(_, w)| w.to_lowercase())
                    .collect::<Vec<_>>()
            })
            .filter(|p| !p.is_empty())
            .collect();
        // Longest phrases first so the first hit is the longest match.
        phrases.sort_by_key(|p| std::cmp::Reverse(p.len()));
        Lexicon { phrases }
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    fn longest_match(&self, words: &[&str]) -> Option<usize> {
        self.phrases
            .iter()
            .find(|p| {
                p.len() <= words.len()
                    && p.iter().zip(words).all(|(a, b)| a.eq_ignore_ascii_case(b))
            })
            .map(Vec::len)
    }
}

#[derive(Debug, Clone)]
enum Lexeme {
    Op(Operator),
    Interval(crate::stl::Interval),
    Word(String),
    Atom(Atom),
    LParen,
    RParen,
}

const COMPARATOR_HEADS: [&str; 3] = ["math", "more", "less"];

fn binding_power(op: &Operator) -> (u8, bool) {
    use crate::stl::OpKind::*;
    match op.kind {
        And => (5, false),
        Or => (4, false),
        Until => (3, false),
        Imply => (2, true),
        Equal => (1, false),
        Not | Finally | Globally => (6, false),
    }
}

/// Reads a grounded formula in the given format.
pub fn parse_full(text: &str, fmt: FormatSpec, lexicon: &Lexicon) -> Result<Formula, ParseError> {
    let tokens = lex(text, fmt.op_style, lexicon, fmt.order == Order::InOrder)?;
    if tokens.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    match fmt.order {
        Order::PreOrder => parse_pre_order(&tokens),
        Order::InOrder => {
            check_balance(&tokens)?;
            let mut p = Climber { tokens: &tokens, pos: 0 };
            let f = p.expr(0, None)?;
            match p.tokens.get(p.pos) {
                Some(t) => Err(ParseError::DanglingTokens {
                    position: t.position,
                }),
                None => Ok(f),
            }
        }
    }
}

// In pre-order text adjacent atoms are separate operands, so word runs are
// only merged for in-order input.
fn lex(
    text: &str,
    style: OpStyle,
    lexicon: &Lexicon,
    merge_runs: bool,
) -> Result<Vec<Token>, ParseError> {
    let raw = split_words(text);
    let words: Vec<&str> = raw.iter().map(|(_, w)| *w).collect();

    // First pass: classify raw words, consuming lexicon phrases whole.
    let mut lexemes: Vec<(usize, Lexeme)> = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let w = words[i];
        if w == "(" || w == ")" {
            lexemes.push((i, if w == "(" { Lexeme::LParen } else { Lexeme::RParen }));
            i += 1;
            continue;
        }
        let run_end = words[i..]
            .iter()
            .position(|w| *w == "(" || *w == ")")
            .map_or(words.len(), |p| i + p);
        if let Some(len) = lexicon.longest_match(&words[i..run_end]) {
            let payload = words[i..i + len].join(" ");
            lexemes.push((i, Lexeme::Atom(Atom::Grounded(payload))));
            i += len;
            continue;
        }
        if w.starts_with('[') {
            // `[0,34]` or a spaced `[0, 34]`.
            let mut end = i;
            while end < run_end && !words[end].ends_with(']') {
                end += 1;
            }
            let joined: String = words[i..=end.min(run_end - 1)].concat();
            let iv = parse_interval(&joined).ok_or_else(|| ParseError::UnknownToken {
                position: i,
                token: joined.clone(),
            })?;
            lexemes.push((i, Lexeme::Interval(iv)));
            i = end + 1;
            continue;
        }
        let glued_comparator = style == OpStyle::Word
            && w == "equal"
            && i > 0
            && COMPARATOR_HEADS.contains(&words[i - 1]);
        let lexeme = if glued_comparator {
            Lexeme::Word(w.to_string())
        } else if let Some(idx) = w.find('[') {
            let (name, rest) = w.split_at(idx);
            match (op_kind(name, style), parse_interval(rest)) {
                (Some(kind), Some(iv)) if kind.is_temporal() => {
                    Lexeme::Op(Operator::timed(kind, iv))
                }
                _ => {
                    return Err(ParseError::UnknownToken {
                        position: i,
                        token: w.to_string(),
                    })
                }
            }
        } else if let Some(kind) = op_kind(w, style) {
            Lexeme::Op(Operator::new(kind))
        } else {
            Lexeme::Word(w.to_string())
        };
        lexemes.push((i, lexeme));
        i += 1;
    }

    // Second pass: attach intervals, merge word runs into atoms.
    let mut tokens: Vec<Token> = Vec::new();
    let mut idx = 0;
    while idx < lexemes.len() {
        let (pos, lexeme) = &lexemes[idx];
        let span = raw[*pos].0.clone();
        match lexeme {
            Lexeme::Word(_) => {
                let mut words_run = Vec::new();
                let mut end_span = span.clone();
                while let Some((p, Lexeme::Word(w))) = lexemes.get(idx) {
                    words_run.push(w.as_str());
                    end_span = raw[*p].0.clone();
                    idx += 1;
                    if !merge_runs {
                        break;
                    }
                }
                let payload = words_run.join(" ");
                let atom = match placeholder(&payload) {
                    Some(Some(i)) if words_run.len() == 1 => Atom::Placeholder(i),
                    Some(None) if words_run.len() == 1 => {
                        return Err(ParseError::UnknownToken {
                            position: *pos,
                            token: payload,
                        })
                    }
                    _ => Atom::Grounded(payload.clone()),
                };
                tokens.push(Token {
                    text: payload,
                    kind: TokenKind::Atom(atom),
                    position: *pos,
                    span: span.start..end_span.end,
                });
                continue;
            }
            Lexeme::Op(op) => {
                let mut op = *op;
                let mut text = raw[*pos].1.to_string();
                if op.interval.is_none() && op.kind.is_temporal() {
                    if let Some((_, Lexeme::Interval(iv))) = lexemes.get(idx + 1) {
                        op.interval = Some(*iv);
                        text.push_str(&iv.to_string());
                        idx += 1;
                    }
                }
                tokens.push(Token {
                    text,
                    kind: TokenKind::Op(op),
                    position: *pos,
                    span,
                });
            }
            Lexeme::Interval(iv) => {
                return Err(ParseError::UnknownToken {
                    position: *pos,
                    token: iv.to_string(),
                })
            }
            Lexeme::Atom(atom) => tokens.push(Token {
                text: atom.to_string(),
                kind: TokenKind::Atom(atom.clone()),
                position: *pos,
                span,
            }),
            Lexeme::LParen => tokens.push(Token {
                text: "(".into(),
                kind: TokenKind::LParen,
                position: *pos,
                span,
            }),
            Lexeme::RParen => tokens.push(Token {
                text: ")".into(),
                kind: TokenKind::RParen,
                position: *pos,
                span,
            }),
        }
        idx += 1;
    }
    Ok(tokens)
}

struct Climber<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Climber<'a> {
    fn missing(owner: Option<&Token>, at: Option<&Token>) -> ParseError {
        match owner.or(at) {
            Some(t) => ParseError::ArityMismatch {
                position: t.position,
                operator: t.text.clone(),
            },
            None => ParseError::EmptyInput,
        }
    }

    fn expr(&mut self, min_bp: u8, owner: Option<&'a Token>) -> Result<Formula, ParseError> {
        let mut lhs = self.unary(owner)?;
        while let Some(tok) = self.tokens.get(self.pos) {
            let TokenKind::Op(op) = &tok.kind else {
                break;
            };
            if op.arity() != 2 {
                return Err(ParseError::DanglingTokens {
                    position: tok.position,
                });
            }
            let (bp, right_assoc) = binding_power(op);
            if bp < min_bp {
                break;
            }
            self.pos += 1;
            let next_min = if right_assoc { bp } else { bp + 1 };
            let rhs = self.expr(next_min, Some(tok))?;
            lhs = Formula::node(*op, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self, owner: Option<&'a Token>) -> Result<Formula, ParseError> {
        let Some(tok) = self.tokens.get(self.pos) else {
            return Err(Self::missing(owner, None));
        };
        match &tok.kind {
            TokenKind::Op(op) if op.arity() == 1 => {
                self.pos += 1;
                let child = self.unary(Some(tok))?;
                Ok(Formula::node(*op, vec![child]))
            }
            TokenKind::Atom(a) => {
                self.pos += 1;
                Ok(Formula::Atom(a.clone()))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expr(0, Some(tok))?;
                match self.tokens.get(self.pos) {
                    Some(Token {
                        kind: TokenKind::RParen,
                        ..
                    }) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(t) => Err(ParseError::DanglingTokens {
                        position: t.position,
                    }),
                    None => Err(ParseError::UnbalancedParentheses {
                        position: tok.position,
                    }),
                }
            }
            TokenKind::Op(_) | TokenKind::RParen => Err(Self::missing(owner, Some(tok))),
        }
    }
}
