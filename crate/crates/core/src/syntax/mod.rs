//! Linear text formats for formulas.
//!
//! A [`FormatSpec`] picks a traversal order (pre-order or in-order) and an
//! operator alphabet (symbols or words). Pre-order output has no parentheses;
//! in-order output parenthesizes every binary application and writes unary
//! operators as prefixes, e.g. `((prop_2 imply prop_3) equal finally[55,273] prop_1)`.

mod surface;
mod token;

pub use surface::{parse_full, Lexicon};
pub use token::{tokenize, Token, TokenKind, TokenSeq};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stl::{Formula, Operator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    PreOrder,
    InOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpStyle {
    Symbol,
    Word,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FormatSpec {
    pub order: Order,
    pub op_style: OpStyle,
}

impl FormatSpec {
    pub const PRE_SYMBOL: FormatSpec = FormatSpec::new(Order::PreOrder, OpStyle::Symbol);
    pub const PRE_WORD: FormatSpec = FormatSpec::new(Order::PreOrder, OpStyle::Word);
    pub const IN_SYMBOL: FormatSpec = FormatSpec::new(Order::InOrder, OpStyle::Symbol);
    pub const IN_WORD: FormatSpec = FormatSpec::new(Order::InOrder, OpStyle::Word);

    pub const ALL: [FormatSpec; 4] = [
        FormatSpec::PRE_SYMBOL,
        FormatSpec::PRE_WORD,
        FormatSpec::IN_SYMBOL,
        FormatSpec::IN_WORD,
    ];

    pub const fn new(order: Order, op_style: OpStyle) -> Self {
        FormatSpec { order, op_style }
    }

    /// Command-line name, e.g. `preorder-symbol`.
    pub fn name(&self) -> &'static str {
        match (self.order, self.op_style) {
            (Order::PreOrder, OpStyle::Symbol) => "preorder-symbol",
            (Order::PreOrder, OpStyle::Word) => "preorder-word",
            (Order::InOrder, OpStyle::Symbol) => "inorder-symbol",
            (Order::InOrder, OpStyle::Word) => "inorder-word",
        }
    }
}

impl fmt::Display for FormatSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
#[error("unknown format `{0}` (expected preorder-symbol, preorder-word, inorder-symbol or inorder-word)")]
pub struct UnknownFormat(pub String);

impl FromStr for FormatSpec {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', ' ', '+'], "-");
        let spec = match norm.as_str() {
            "preorder-symbol" | "pre-order-symbol" | "preorder-operator" => FormatSpec::PRE_SYMBOL,
            "preorder-word" | "pre-order-word" => FormatSpec::PRE_WORD,
            "inorder-symbol" | "in-order-symbol" | "inorder-operator" => FormatSpec::IN_SYMBOL,
            "inorder-word" | "in-order-word" => FormatSpec::IN_WORD,
            _ => return Err(UnknownFormat(s.to_string())),
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("unbalanced parentheses at token {position}")]
    UnbalancedParentheses { position: usize },
    #[error("unknown token `{token}` at token {position}")]
    UnknownToken { position: usize, token: String },
    #[error("operator `{operator}` at token {position} is missing operands")]
    ArityMismatch { position: usize, operator: String },
    #[error("dangling tokens starting at token {position}")]
    DanglingTokens { position: usize },
}

impl ParseError {
    pub fn position(&self) -> Option<usize> {
        match self {
            ParseError::EmptyInput => None,
            ParseError::UnbalancedParentheses { position }
            | ParseError::UnknownToken { position, .. }
            | ParseError::ArityMismatch { position, .. }
            | ParseError::DanglingTokens { position } => Some(*position),
        }
    }
}

fn op_token(op: &Operator, style: OpStyle) -> String {
    let name = match style {
        OpStyle::Symbol => op.kind.symbol(),
        OpStyle::Word => op.kind.word(),
    };
    match op.interval {
        Some(iv) => format!("{name}{iv}"),
        None => name.to_string(),
    }
}

/// Renders `f` as text in the given format.
pub fn linearize(f: &Formula, fmt: FormatSpec) -> String {
    let mut out = String::new();
    match fmt.order {
        Order::PreOrder => {
            let tokens = pre_order_tokens(f, fmt.op_style);
            out.push_str(&tokens.join(" "));
        }
        Order::InOrder => write_in_order(f, fmt.op_style, &mut out),
    }
    out
}

/// Pre-order token list, one string per token.
pub fn pre_order_tokens(f: &Formula, style: OpStyle) -> Vec<String> {
    f.nodes()
        .map(|n| match n {
            Formula::Atom(a) => a.to_string(),
            Formula::Node { op, .. } => op_token(op, style),
        })
        .collect()
}

/// Python-style list rendering of the pre-order tokens, e.g.
/// `['<->', '->', 'prop_2', 'prop_3', 'F[55,273]', 'prop_1']`.
pub fn pre_order_list_literal(f: &Formula, style: OpStyle) -> String {
    let items: Vec<String> = pre_order_tokens(f, style)
        .into_iter()
        .map(|t| format!("'{t}'"))
        .collect();
    format!("[{}]", items.join(", "))
}

fn write_in_order(f: &Formula, style: OpStyle, out: &mut String) {
    match f {
        Formula::Atom(a) => out.push_str(&a.to_string()),
        Formula::Node { op, children } => match children.as_slice() {
            [child] => {
                out.push_str(&op_token(op, style));
                out.push(' ');
                write_in_order(child, style, out);
            }
            [lhs, rhs] => {
                out.push('(');
                write_in_order(lhs, style, out);
                out.push(' ');
                out.push_str(&op_token(op, style));
                out.push(' ');
                write_in_order(rhs, style, out);
                out.push(')');
            }
            _ => {
                // Malformed arity: emit something readable rather than panic.
                out.push_str(&op_token(op, style));
                out.push('(');
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_in_order(c, style, out);
                }
                out.push(')');
            }
        },
    }
}

/// Parses text in the given format.
///
/// In-order input must be fully parenthesized: each parenthesis level holds at
/// most one binary application. The outermost level may omit its parentheses,
/// and redundant parentheses around a single operand are accepted. Pre-order
/// input may be plain space-separated text or a quoted list literal.
pub fn parse(text: &str, fmt: FormatSpec) -> Result<Formula, ParseError> {
    let seq = tokenize(text, fmt.op_style)?;
    match fmt.order {
        Order::PreOrder => parse_pre_order(&seq.tokens),
        Order::InOrder => parse_in_order(&seq.tokens),
    }
}

pub(crate) fn parse_pre_order(tokens: &[Token]) -> Result<Formula, ParseError> {
    if tokens.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    if let Some(t) = tokens
        .iter()
        .find(|t| matches!(t.kind, TokenKind::LParen | TokenKind::RParen))
    {
        return Err(ParseError::UnknownToken {
            position: t.position,
            token: t.text.clone(),
        });
    }
    let mut pos = 0;
    let f = pre_order_term(tokens, &mut pos, None)?;
    if pos < tokens.len() {
        return Err(ParseError::DanglingTokens {
            position: tokens[pos].position,
        });
    }
    Ok(f)
}

fn pre_order_term(
    tokens: &[Token],
    pos: &mut usize,
    parent: Option<&Token>,
) -> Result<Formula, ParseError> {
    let Some(tok) = tokens.get(*pos) else {
        let parent = parent.expect("non-empty input has a first token");
        return Err(ParseError::ArityMismatch {
            position: parent.position,
            operator: parent.text.clone(),
        });
    };
    *pos += 1;
    match &tok.kind {
        TokenKind::Atom(atom) => Ok(Formula::Atom(atom.clone())),
        TokenKind::Op(op) => {
            let children = (0..op.arity())
                .map(|_| pre_order_term(tokens, pos, Some(tok)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Formula::node(*op, children))
        }
        TokenKind::LParen | TokenKind::RParen => unreachable!("rejected above"),
    }
}

pub(crate) fn check_balance(tokens: &[Token]) -> Result<(), ParseError> {
    let mut open: Vec<usize> = Vec::new();
    for t in tokens {
        match t.kind {
            TokenKind::LParen => open.push(t.position),
            TokenKind::RParen if open.pop().is_none() => {
                return Err(ParseError::UnbalancedParentheses {
                    position: t.position,
                });
            }
            _ => {}
        }
    }
    match open.first() {
        Some(&position) => Err(ParseError::UnbalancedParentheses { position }),
        None => Ok(()),
    }
}

fn parse_in_order(tokens: &[Token]) -> Result<Formula, ParseError> {
    if tokens.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    check_balance(tokens)?;
    let mut p = InOrderParser { tokens, pos: 0 };
    let f = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(ParseError::DanglingTokens {
            position: t.position,
        });
    }
    Ok(f)
}

struct InOrderParser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> InOrderParser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn peek_binary(&self) -> Option<(&'a Token, Operator)> {
        match self.peek() {
            Some(t @ Token {
                kind: TokenKind::Op(op),
                ..
            }) if op.arity() == 2 => Some((t, *op)),
            _ => None,
        }
    }

    // expr := unary (binop unary)?
    fn expr(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary(None)?;
        let Some((tok, op)) = self.peek_binary() else {
            return Ok(lhs);
        };
        self.pos += 1;
        let rhs = self.unary(Some(tok))?;
        if let Some((extra, _)) = self.peek_binary() {
            // A second binary operator at the same level needs parentheses.
            return Err(ParseError::DanglingTokens {
                position: extra.position,
            });
        }
        Ok(Formula::node(op, vec![lhs, rhs]))
    }

    // unary := unop unary | primary
    fn unary(&mut self, owner: Option<&'a Token>) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(
                t @ Token {
                    kind: TokenKind::Op(op),
                    ..
                },
            ) if op.arity() == 1 => {
                self.pos += 1;
                let child = self.unary(Some(t))?;
                Ok(Formula::node(*op, vec![child]))
            }
            _ => self.primary(owner),
        }
    }

    fn primary(&mut self, owner: Option<&'a Token>) -> Result<Formula, ParseError> {
        let missing = |t: Option<&Token>| match owner.or(t) {
            Some(o) => ParseError::ArityMismatch {
                position: o.position,
                operator: o.text.clone(),
            },
            None => ParseError::EmptyInput,
        };
        let Some(tok) = self.peek() else {
            return Err(missing(None));
        };
        match &tok.kind {
            TokenKind::Atom(a) => {
                self.pos += 1;
                Ok(Formula::Atom(a.clone()))
            }
            TokenKind::LParen => {
                self.pos += 1;
                if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::RParen)) {
                    return Err(missing(Some(tok)));
                }
                let inner = self.expr()?;
                match self.next() {
                    Some(Token {
                        kind: TokenKind::RParen,
                        ..
                    }) => Ok(inner),
                    Some(t) => Err(ParseError::DanglingTokens {
                        position: t.position,
                    }),
                    None => Err(ParseError::UnbalancedParentheses {
                        position: tok.position,
                    }),
                }
            }
            // A binary operator or closer where an operand belongs.
            TokenKind::Op(_) | TokenKind::RParen => Err(match owner {
                Some(_) => missing(None),
                None => ParseError::ArityMismatch {
                    position: tok.position,
                    operator: tok.text.clone(),
                },
            }),
        }
    }
}

/// `linearize(parse(text, from), to)`.
pub fn convert(text: &str, from: FormatSpec, to: FormatSpec) -> Result<String, ParseError> {
    Ok(linearize(&parse(text, from)?, to))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Repaired {
    pub text: String,
    pub formula: Formula,
    /// False when the input already parsed and was returned untouched.
    pub repaired: bool,
}

impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&linearize(self, FormatSpec::IN_WORD))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("unrepairable input: {error}")]
pub struct Unrepairable {
    pub error: ParseError,
    pub repaired: bool,
}

/// Rule-based syntactic repair.
///
/// Rules, in order: collapse whitespace, strip unmatched trailing `)`, append
/// missing `)` at the end. Token identity is never changed. Text that already
/// parses is returned as-is.
pub fn repair(text: &str, fmt: FormatSpec) -> Result<Repaired, Unrepairable> {
    let original_err = match parse(text, fmt) {
        Ok(formula) => {
            return Ok(Repaired {
                text: text.to_string(),
                formula,
                repaired: false,
            })
        }
        Err(e) => e,
    };

    let mut candidate = text.split_whitespace().collect::<Vec<_>>().join(" ");

    let opens = candidate.matches('(').count();
    let mut closes = candidate.matches(')').count();
    while closes > opens && candidate.ends_with(')') {
        candidate.pop();
        candidate.truncate(candidate.trim_end().len());
        closes -= 1;
    }
    if fmt.order == Order::InOrder && opens > closes && leading_closers_ok(&candidate) {
        candidate.push_str(&")".repeat(opens - closes));
    }

    match parse(&candidate, fmt) {
        Ok(formula) => Ok(Repaired {
            text: candidate,
            formula,
            repaired: true,
        }),
        Err(_) => Err(Unrepairable {
            error: original_err,
            repaired: false,
        }),
    }
}

// Appending closers cannot fix a closer that appears before its opener.
fn leading_closers_ok(text: &str) -> bool {
    let mut depth = 0i64;
    for c in text.chars() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => {}
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{tree_equal, Interval};

    fn row1() -> Formula {
        Formula::equal(
            Formula::imply(Formula::prop(2), Formula::prop(3)),
            Formula::finally(Some(Interval::bounded(55, 273)), Formula::prop(1)),
        )
    }

    #[test]
    fn linearize_annotated_row1() {
        assert_eq!(
            linearize(&row1(), FormatSpec::PRE_SYMBOL),
            "<-> -> prop_2 prop_3 F[55,273] prop_1"
        );
        assert_eq!(
            linearize(&row1(), FormatSpec::IN_WORD),
            "((prop_2 imply prop_3) equal finally[55,273] prop_1)"
        );
        assert_eq!(
            pre_order_list_literal(&row1(), OpStyle::Symbol),
            "['<->', '->', 'prop_2', 'prop_3', 'F[55,273]', 'prop_1']"
        );
    }

    #[test]
    fn atom_renders_bare_in_every_format() {
        for fmt in FormatSpec::ALL {
            assert_eq!(linearize(&Formula::prop(1), fmt), "prop_1");
        }
    }

    #[test]
    fn parse_annotated_row3_in_order() {
        let f = parse(
            "(negation prop_1 equal (prop_3 until[279,438] prop_2))",
            FormatSpec::IN_WORD,
        )
        .unwrap();
        let expected = Formula::equal(
            Formula::not(Formula::prop(1)),
            Formula::until(
                Some(Interval::bounded(279, 438)),
                Formula::prop(3),
                Formula::prop(2),
            ),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn parse_annotated_row2_pre_order() {
        let f = parse(
            "U[400,infinite] -> prop_3 prop_1 negation prop_2",
            FormatSpec::PRE_SYMBOL,
        )
        .unwrap();
        let expected = Formula::until(
            Some(Interval::unbounded(400)),
            Formula::imply(Formula::prop(3), Formula::prop(1)),
            Formula::not(Formula::prop(2)),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn parse_list_literal() {
        let f = parse(
            "['<->', '->', 'prop_2', 'prop_3', 'F[55,273]', 'prop_1']",
            FormatSpec::PRE_SYMBOL,
        )
        .unwrap();
        assert_eq!(f, row1());
    }

    #[test]
    fn unbalanced_open() {
        assert_eq!(
            parse("( prop_1 and", FormatSpec::IN_WORD),
            Err(ParseError::UnbalancedParentheses { position: 0 })
        );
        assert_eq!(
            parse("prop_1 ) and prop_2", FormatSpec::IN_WORD),
            Err(ParseError::UnbalancedParentheses { position: 1 })
        );
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert_eq!(
            parse("(prop_1 and)", FormatSpec::IN_WORD),
            Err(ParseError::ArityMismatch {
                position: 2,
                operator: "and".into()
            })
        );
        assert_eq!(
            parse("(prop_1 and prop_2 or prop_3)", FormatSpec::IN_WORD),
            Err(ParseError::DanglingTokens { position: 4 })
        );
        assert_eq!(
            parse("& prop_1", FormatSpec::PRE_SYMBOL),
            Err(ParseError::ArityMismatch {
                position: 0,
                operator: "&".into()
            })
        );
        assert_eq!(
            parse("prop_1 prop_2", FormatSpec::PRE_SYMBOL),
            Err(ParseError::DanglingTokens { position: 1 })
        );
        assert!(matches!(
            parse("prop_1 and prop_2", FormatSpec::IN_SYMBOL),
            Err(ParseError::UnknownToken { position: 1, .. })
        ));
        assert!(matches!(
            parse("finally[55, 273] prop_1", FormatSpec::IN_WORD),
            Err(ParseError::UnknownToken { position: 0, .. })
        ));
        assert_eq!(parse("   ", FormatSpec::IN_WORD), Err(ParseError::EmptyInput));
        assert!(matches!(
            parse("and prop_1", FormatSpec::IN_WORD),
            Err(ParseError::ArityMismatch { position: 0, .. })
        ));
    }

    #[test]
    fn outer_parentheses_optional() {
        let a = parse("prop_1 and prop_2", FormatSpec::IN_WORD).unwrap();
        let b = parse("(prop_1 and prop_2)", FormatSpec::IN_WORD).unwrap();
        let c = parse("((prop_1) and ((prop_2)))", FormatSpec::IN_WORD).unwrap();
        assert!(tree_equal(&a, &b));
        assert!(tree_equal(&a, &c));
    }

    #[test]
    fn convert_alg1_example_to_in_order() {
        assert_eq!(
            convert(
                "U[10,30] <-> negation prop_3 prop_1 G prop_2",
                FormatSpec::PRE_SYMBOL,
                FormatSpec::IN_WORD
            )
            .unwrap(),
            "((negation prop_3 equal prop_1) until[10,30] globally prop_2)"
        );
    }

    #[test]
    fn identity_conversion_is_canonical() {
        assert_eq!(
            convert("( prop_1   and  prop_2 )", FormatSpec::IN_WORD, FormatSpec::IN_WORD).unwrap(),
            "(prop_1 and prop_2)"
        );
    }

    #[test]
    fn repair_appends_missing_closer() {
        let r = repair("((prop_1 and prop_2)", FormatSpec::IN_WORD).unwrap();
        assert_eq!(r.text, "((prop_1 and prop_2))");
        assert!(r.repaired);
    }

    #[test]
    fn repair_leaves_valid_text_alone() {
        let text = "( prop_1  and prop_2 )";
        let r = repair(text, FormatSpec::IN_WORD).unwrap();
        assert_eq!(r.text, text);
        assert!(!r.repaired);
    }

    #[test]
    fn repair_strips_trailing_closers() {
        let r = repair("(prop_1 and prop_2)))", FormatSpec::IN_WORD).unwrap();
        assert_eq!(r.text, "(prop_1 and prop_2)");
        let r = repair("& prop_1 prop_2 )", FormatSpec::PRE_SYMBOL).unwrap();
        assert_eq!(r.text, "& prop_1 prop_2");
    }

    #[test]
    fn misplaced_closer_is_unrepairable() {
        // The rules only touch the tail, so an interior stray `)` survives
        // every rule: stripping needs it at the end, appending cannot cancel it.
        let err = repair("prop_1 ) and prop_2", FormatSpec::IN_WORD).unwrap_err();
        assert!(!err.repaired);
        assert_eq!(err.error, ParseError::UnbalancedParentheses { position: 1 });
    }

    #[test]
    fn format_names_round_trip() {
        for fmt in FormatSpec::ALL {
            assert_eq!(fmt.name().parse::<FormatSpec>().unwrap(), fmt);
        }
        assert!("postfix".parse::<FormatSpec>().is_err());
    }
}
