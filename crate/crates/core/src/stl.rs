//! STL abstract syntax: atoms, operators with optional time intervals, and
//! formulas built from them.
//!
//! Formulas are kept as `(operator, children)` nodes rather than one enum
//! variant per operator so that malformed trees (wrong child counts, misplaced
//! intervals) can be represented and reported by [`validate`] instead of being
//! rejected by the type system at construction time.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Upper end of a time interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bound {
    Finite(u64),
    Infinite,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(v) => write!(f, "{v}"),
            Bound::Infinite => f.write_str("infinite"),
        }
    }
}

/// Integer time window `[lower, upper]` attached to a temporal operator.
///
/// An untimed operator carries no interval at all (`Option::None`); it is
/// never encoded as `[0, infinite]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lower: u64,
    pub upper: Bound,
}

impl Interval {
    pub fn bounded(lower: u64, upper: u64) -> Self {
        Interval {
            lower,
            upper: Bound::Finite(upper),
        }
    }

    pub fn unbounded(lower: u64) -> Self {
        Interval {
            lower,
            upper: Bound::Infinite,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.upper, Bound::Finite(_))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lower, self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Not,
    And,
    Or,
    Imply,
    Equal,
    Finally,
    Globally,
    Until,
}

impl OpKind {
    pub const ALL: [OpKind; 8] = [
        OpKind::Not,
        OpKind::And,
        OpKind::Or,
        OpKind::Imply,
        OpKind::Equal,
        OpKind::Finally,
        OpKind::Globally,
        OpKind::Until,
    ];

    pub fn arity(self) -> usize {
        match self {
            OpKind::Not | OpKind::Finally | OpKind::Globally => 1,
            OpKind::And | OpKind::Or | OpKind::Imply | OpKind::Equal | OpKind::Until => 2,
        }
    }

    /// Only `finally`, `globally` and `until` may carry an interval.
    pub fn is_temporal(self) -> bool {
        matches!(self, OpKind::Finally | OpKind::Globally | OpKind::Until)
    }

    pub fn word(self) -> &'static str {
        match self {
            OpKind::Not => "negation",
            OpKind::And => "and",
            OpKind::Or => "or",
            OpKind::Imply => "imply",
            OpKind::Equal => "equal",
            OpKind::Finally => "finally",
            OpKind::Globally => "globally",
            OpKind::Until => "until",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            OpKind::Not => "negation",
            OpKind::And => "&",
            OpKind::Or => "|",
            OpKind::Imply => "->",
            OpKind::Equal => "<->",
            OpKind::Finally => "F",
            OpKind::Globally => "G",
            OpKind::Until => "U",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Operator {
    pub kind: OpKind,
    pub interval: Option<Interval>,
}

impl Operator {
    pub fn new(kind: OpKind) -> Self {
        Operator {
            kind,
            interval: None,
        }
    }

    pub fn timed(kind: OpKind, interval: Interval) -> Self {
        Operator {
            kind,
            interval: Some(interval),
        }
    }

    pub fn arity(&self) -> usize {
        self.kind.arity()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// Lifted placeholder, rendered `prop_<index>`; indices start at 1.
    Placeholder(u32),
    /// Grounded predicate text, kept opaque (e.g. `signal_1_n less 92.6`).
    Grounded(String),
}

impl Atom {
    pub fn placeholder_index(&self) -> Option<u32> {
        match self {
            Atom::Placeholder(i) => Some(*i),
            Atom::Grounded(_) => None,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Placeholder(i) => write!(f, "prop_{i}"),
            Atom::Grounded(text) => f.write_str(text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Atom),
    Node {
        op: Operator,
        children: Vec<Formula>,
    },
}

impl Formula {
    pub fn prop(index: u32) -> Self {
        Formula::Atom(Atom::Placeholder(index))
    }

    pub fn grounded(payload: impl Into<String>) -> Self {
        Formula::Atom(Atom::Grounded(payload.into()))
    }

    pub fn node(op: Operator, children: Vec<Formula>) -> Self {
        Formula::Node { op, children }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: Formula) -> Self {
        Formula::node(Operator::new(OpKind::Not), vec![child])
    }

    pub fn and(lhs: Formula, rhs: Formula) -> Self {
        Formula::node(Operator::new(OpKind::And), vec![lhs, rhs])
    }

    pub fn or(lhs: Formula, rhs: Formula) -> Self {
        Formula::node(Operator::new(OpKind::Or), vec![lhs, rhs])
    }

    pub fn imply(lhs: Formula, rhs: Formula) -> Self {
        Formula::node(Operator::new(OpKind::Imply), vec![lhs, rhs])
    }

    pub fn equal(lhs: Formula, rhs: Formula) -> Self {
        Formula::node(Operator::new(OpKind::Equal), vec![lhs, rhs])
    }

    pub fn finally(interval: Option<Interval>, child: Formula) -> Self {
        Formula::node(
            Operator {
                kind: OpKind::Finally,
                interval,
            },
            vec![child],
        )
    }

    pub fn globally(interval: Option<Interval>, child: Formula) -> Self {
        Formula::node(
            Operator {
                kind: OpKind::Globally,
                interval,
            },
            vec![child],
        )
    }

    pub fn until(interval: Option<Interval>, lhs: Formula, rhs: Formula) -> Self {
        Formula::node(
            Operator {
                kind: OpKind::Until,
                interval,
            },
            vec![lhs, rhs],
        )
    }

    pub fn children(&self) -> &[Formula] {
        match self {
            Formula::Atom(_) => &[],
            Formula::Node { children, .. } => children,
        }
    }

    pub fn operator(&self) -> Option<&Operator> {
        match self {
            Formula::Atom(_) => None,
            Formula::Node { op, .. } => Some(op),
        }
    }

    /// Pre-order iterator over every node.
    pub fn nodes(&self) -> Nodes<'_> {
        Nodes { stack: vec![self] }
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.nodes().filter_map(|n| match n {
            Formula::Atom(a) => Some(a),
            Formula::Node { .. } => None,
        })
    }

    pub fn placeholders(&self) -> BTreeSet<u32> {
        self.atoms().filter_map(Atom::placeholder_index).collect()
    }

    /// True when every atom is a placeholder.
    pub fn is_lifted(&self) -> bool {
        self.atoms().all(|a| matches!(a, Atom::Placeholder(_)))
    }

    pub fn ap_count(&self) -> usize {
        ap_count(self)
    }

    pub fn op_count(&self) -> usize {
        op_count(self)
    }

    pub fn node_count(&self) -> usize {
        self.nodes().count()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(Formula::depth).max().unwrap_or(0)
    }

    pub fn subterm(&self, path: &Path) -> Option<&Formula> {
        let mut cur = self;
        for &i in &path.0 {
            cur = cur.children().get(i)?;
        }
        Some(cur)
    }

    /// Rebuilds the formula bottom-up, applying `f` to every node after its
    /// children have been rebuilt.
    pub fn map_bottom_up(self, f: &mut impl FnMut(Formula) -> Formula) -> Formula {
        let rebuilt = match self {
            Formula::Atom(_) => self,
            Formula::Node { op, children } => Formula::Node {
                op,
                children: children.into_iter().map(|c| c.map_bottom_up(f)).collect(),
            },
        };
        f(rebuilt)
    }
}

pub struct Nodes<'a> {
    stack: Vec<&'a Formula>,
}

impl<'a> Iterator for Nodes<'a> {
    type Item = &'a Formula;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children().iter().rev());
        Some(node)
    }
}

/// Child-index path from the root; the empty path is the root itself.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path(pub Vec<usize>);

impl Path {
    pub fn root() -> Self {
        Path(Vec::new())
    }

    pub fn child(&self, index: usize) -> Self {
        let mut v = self.0.clone();
        v.push(index);
        Path(v)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for i in &self.0 {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

impl serde::Serialize for Path {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A rule broken at a specific node. Violations are data, not failures.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Violation {
    pub path: Path,
    pub rule: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.rule, self.path, self.message)
    }
}

pub const RULE_ARITY: &str = "arity";
pub const RULE_INTERVAL_KIND: &str = "interval-on-untimed-operator";
pub const RULE_INTERVAL_ORDER: &str = "interval-order";
pub const RULE_PLACEHOLDER_INDEX: &str = "placeholder-index";
pub const RULE_EMPTY_PAYLOAD: &str = "empty-payload";
pub const RULE_UNBALANCED_PAYLOAD: &str = "unbalanced-payload";

/// Checks arity, interval placement and ordering, and atom well-formedness.
pub fn validate(f: &Formula) -> Vec<Violation> {
    let mut out = Vec::new();
    validate_at(f, Path::root(), &mut out);
    out
}

fn validate_at(f: &Formula, path: Path, out: &mut Vec<Violation>) {
    match f {
        Formula::Atom(Atom::Placeholder(0)) => out.push(Violation {
            path,
            rule: RULE_PLACEHOLDER_INDEX,
            message: "placeholder indices start at 1".into(),
        }),
        Formula::Atom(Atom::Placeholder(_)) => {}
        Formula::Atom(Atom::Grounded(text)) => {
            if text.trim().is_empty() {
                out.push(Violation {
                    path,
                    rule: RULE_EMPTY_PAYLOAD,
                    message: "grounded atom has empty payload".into(),
                });
            } else if !parens_balanced(text) {
                out.push(Violation {
                    path,
                    rule: RULE_UNBALANCED_PAYLOAD,
                    message: format!("payload `{text}` has unbalanced parentheses"),
                });
            }
        }
        Formula::Node { op, children } => {
            if children.len() != op.arity() {
                out.push(Violation {
                    path: path.clone(),
                    rule: RULE_ARITY,
                    message: format!(
                        "`{}` expects {} operand(s), found {}",
                        op.kind.word(),
                        op.arity(),
                        children.len()
                    ),
                });
            }
            if let Some(iv) = op.interval {
                if !op.kind.is_temporal() {
                    out.push(Violation {
                        path: path.clone(),
                        rule: RULE_INTERVAL_KIND,
                        message: format!("`{}` cannot carry an interval", op.kind.word()),
                    });
                }
                if let Bound::Finite(upper) = iv.upper {
                    if iv.lower > upper {
                        out.push(Violation {
                            path: path.clone(),
                            rule: RULE_INTERVAL_ORDER,
                            message: format!("lower bound {} exceeds upper bound {upper}", iv.lower),
                        });
                    }
                }
            }
            for (i, c) in children.iter().enumerate() {
                validate_at(c, path.child(i), out);
            }
        }
    }
}

fn parens_balanced(text: &str) -> bool {
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
    depth == 0
}

#[derive(Debug, Error)]
#[error("invalid formula: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct InvalidFormula(pub Vec<Violation>);

/// Rewrites `imply` and `equal` into the basic operator set.
///
/// `a -> b` becomes `!a | b`; `a <-> b` becomes `(a -> b) & (b -> a)`, which is
/// then rewritten in turn.
pub fn desugar(f: &Formula) -> Result<Formula, InvalidFormula> {
    let violations = validate(f);
    if !violations.is_empty() {
        return Err(InvalidFormula(violations));
    }
    Ok(desugar_valid(f))
}

fn desugar_valid(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_) => f.clone(),
        Formula::Node { op, children } => {
            let kids: Vec<Formula> = children.iter().map(desugar_valid).collect();
            match op.kind {
                OpKind::Imply => {
                    let [a, b]: [Formula; 2] = kids.try_into().expect("validated arity");
                    Formula::or(Formula::not(a), b)
                }
                OpKind::Equal => {
                    let [a, b]: [Formula; 2] = kids.try_into().expect("validated arity");
                    Formula::and(
                        Formula::or(Formula::not(a.clone()), b.clone()),
                        Formula::or(Formula::not(b), a),
                    )
                }
                _ => Formula::Node {
                    op: *op,
                    children: kids,
                },
            }
        }
    }
}

/// How [`tree_equal_with`] compares two formulas.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualityMode {
    /// Identical trees after payload whitespace normalization.
    #[default]
    Structural,
    /// Additionally treats `and`, `or` and `equal` operands as unordered.
    Commutative,
}

pub fn tree_equal(a: &Formula, b: &Formula) -> bool {
    tree_equal_with(a, b, EqualityMode::Structural)
}

pub fn tree_equal_with(a: &Formula, b: &Formula, mode: EqualityMode) -> bool {
    match mode {
        EqualityMode::Structural => first_divergence(a, b).is_none(),
        EqualityMode::Commutative => canonical(a) == canonical(b),
    }
}

/// Path of the first node (pre-order) at which the trees differ.
pub fn first_divergence(a: &Formula, b: &Formula) -> Option<Path> {
    divergence_at(a, b, Path::root())
}

fn divergence_at(a: &Formula, b: &Formula, path: Path) -> Option<Path> {
    match (a, b) {
        (Formula::Atom(x), Formula::Atom(y)) => {
            if atoms_equal(x, y) {
                None
            } else {
                Some(path)
            }
        }
        (
            Formula::Node {
                op: oa,
                children: ca,
            },
            Formula::Node {
                op: ob,
                children: cb,
            },
        ) => {
            if oa != ob || ca.len() != cb.len() {
                return Some(path);
            }
            ca.iter()
                .zip(cb)
                .enumerate()
                .find_map(|(i, (x, y))| divergence_at(x, y, path.child(i)))
        }
        _ => Some(path),
    }
}

fn atoms_equal(a: &Atom, b: &Atom) -> bool {
    match (a, b) {
        (Atom::Placeholder(x), Atom::Placeholder(y)) => x == y,
        (Atom::Grounded(x), Atom::Grounded(y)) => normalize_payload(x) == normalize_payload(y),
        _ => false,
    }
}

/// Collapses runs of whitespace to single spaces and trims the ends.
pub fn normalize_payload(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn canonical(f: &Formula) -> Formula {
    f.clone().map_bottom_up(&mut |node| match node {
        Formula::Atom(Atom::Grounded(text)) => Formula::Atom(Atom::Grounded(normalize_payload(&text))),
        Formula::Node { op, mut children }
            if matches!(op.kind, OpKind::And | OpKind::Or | OpKind::Equal) =>
        {
            children.sort();
            Formula::Node { op, children }
        }
        other => other,
    })
}

pub fn ap_count(f: &Formula) -> usize {
    f.atoms().count()
}

/// Number of operator nodes; `imply` and `equal` count once each.
pub fn op_count(f: &Formula) -> usize {
    f.nodes().filter(|n| matches!(n, Formula::Node { .. })).count()
}
