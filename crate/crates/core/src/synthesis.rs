//! Random generation of lifted formulas.
//!
//! Generation runs in three phases:
//!
//! 1. draw the AP count uniformly in `1..=max_aps` and shuffle the placeholders
//!    `prop_1..prop_k` into a random order;
//! 2. split that list into consecutive sub-lists and close each one into a
//!    single pre-order subtree by prepending random operators; binary operators
//!    reduce the number of open subtrees by one, unary ones leave it unchanged;
//! 3. join the subtrees by prepending random binary operators.
//!
//! For example the sub-lists `[prop_3, prop_1]`, `[prop_2]` may become
//! `[<->, negation, prop_3, prop_1]` and `[G, prop_2]`, then assemble into
//! `U[10,30] <-> negation prop_3 prop_1 G prop_2`.
//!
//! Candidates that break a configured sanity rule are regenerated (keeping the
//! drawn AP count so the count distribution stays uniform) up to a fixed
//! number of attempts.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stl::{Bound, Formula, Interval, OpKind, Operator, Path, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub min: u64,
    pub max: u64,
}

impl IntRange {
    pub const fn new(min: u64, max: u64) -> Self {
        IntRange { min, max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub max_aps: usize,
    /// Range for the lower bound `a`.
    pub bound_low_range: IntRange,
    /// Range for the upper bound `b`; `b` is additionally forced above `a`.
    pub bound_high_range: IntRange,
    /// Probability that a chosen temporal operator carries no interval.
    pub p_untimed: f64,
    /// Probability that a timed operator's upper bound is `infinite`.
    pub p_infinite: f64,
    /// Probability of prepending one extra unary operator to a closed sub-list.
    pub p_unary_prefix: f64,
    pub forbidden_patterns: Vec<String>,
    pub seed: u64,
    /// Attempts per requested formula before giving up.
    pub resample_cap: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            max_aps: 5,
            bound_low_range: IntRange::new(0, 100),
            bound_high_range: IntRange::new(0, 500),
            p_untimed: 0.5,
            p_infinite: 0.2,
            p_unary_prefix: 0.5,
            forbidden_patterns: vec![RULE_NO_DOUBLE_NEGATION.into(), RULE_STRICT_INTERVAL.into()],
            seed: 0,
            resample_cap: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthesis config: {0}")]
    ConfigInvalid(String),
    #[error("no acceptable formula after {attempts} attempts")]
    ResampleBudgetExhausted { attempts: usize },
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::ConfigInvalid(m));
        if self.max_aps < 1 {
            return bad("max_aps must be at least 1".into());
        }
        for (name, p) in [
            ("p_untimed", self.p_untimed),
            ("p_infinite", self.p_infinite),
            ("p_unary_prefix", self.p_unary_prefix),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is outside [0, 1]"));
            }
        }
        let (lo, hi) = (self.bound_low_range, self.bound_high_range);
        if lo.min > lo.max || hi.min > hi.max {
            return bad("bound ranges must be non-empty".into());
        }
        if hi.max <= lo.max {
            return bad(format!(
                "bound_high_range.max ({}) must exceed bound_low_range.max ({})",
                hi.max, lo.max
            ));
        }
        if self.resample_cap < 1 {
            return bad("resample_cap must be at least 1".into());
        }
        SanityRules::from_ids(&self.forbidden_patterns)?;
        Ok(())
    }
}

/// Source of every random decision the generator makes.
///
/// [`RandomChoices`] is the production implementation; tests can script the
/// decisions to force a particular output.
pub trait Choices {
    fn ap_count(&mut self, max: usize) -> usize;
    /// Placeholder indices `1..=n` in the order they appear in the prop list.
    fn prop_order(&mut self, n: usize) -> Vec<u32>;
    /// Sizes of consecutive sub-lists; must be positive and sum to `n`.
    fn split(&mut self, n: usize) -> Vec<usize>;
    /// Operator prepended while a sub-list still has more than one open subtree.
    fn sublist_operator(&mut self) -> Operator;
    /// Optional unary operator prepended once a sub-list has closed.
    fn prefix_operator(&mut self) -> Option<Operator>;
    /// Binary operator joining two assembled subtrees.
    fn assembly_operator(&mut self) -> Operator;
}

// Operator slots: temporal kinds appear twice (untimed and timed entries).
const BINARY_SLOTS: [OpKind; 6] = [
    OpKind::And,
    OpKind::Or,
    OpKind::Imply,
    OpKind::Equal,
    OpKind::Until,
    OpKind::Until,
];
const UNARY_SLOTS: [OpKind; 5] = [
    OpKind::Not,
    OpKind::Finally,
    OpKind::Finally,
    OpKind::Globally,
    OpKind::Globally,
];

pub struct RandomChoices<'c, R> {
    config: &'c SynthConfig,
    rng: R,
}

impl<'c, R: Rng> RandomChoices<'c, R> {
    pub fn new(config: &'c SynthConfig, rng: R) -> Self {
        RandomChoices { config, rng }
    }

    fn operator_for(&mut self, kind: OpKind) -> Operator {
        if !kind.is_temporal() || self.rng.gen_bool(self.config.p_untimed) {
            return Operator::new(kind);
        }
        Operator::timed(kind, self.interval())
    }

    fn interval(&mut self) -> Interval {
        let lo = self.config.bound_low_range;
        let hi = self.config.bound_high_range;
        let lower = self.rng.gen_range(lo.min..=lo.max);
        if self.rng.gen_bool(self.config.p_infinite) {
            return Interval::unbounded(lower);
        }
        let upper = self.rng.gen_range(hi.min.max(lower + 1)..=hi.max);
        Interval::bounded(lower, upper)
    }
}

impl<R: Rng> Choices for RandomChoices<'_, R> {
    fn ap_count(&mut self, max: usize) -> usize {
        self.rng.gen_range(1..=max)
    }

    fn prop_order(&mut self, n: usize) -> Vec<u32> {
        let mut props: Vec<u32> = (1..=n as u32).collect();
        props.shuffle(&mut self.rng);
        props
    }

    fn split(&mut self, n: usize) -> Vec<usize> {
        let parts = self.rng.gen_range(1..=n);
        let mut cuts = rand::seq::index::sample(&mut self.rng, n - 1, parts - 1).into_vec();
        cuts.sort_unstable();
        let mut sizes = Vec::with_capacity(parts);
        let mut prev = 0;
        for c in cuts {
            sizes.push(c + 1 - prev);
            prev = c + 1;
        }
        sizes.push(n - prev);
        sizes
    }

    fn sublist_operator(&mut self) -> Operator {
        let slot = self.rng.gen_range(0..BINARY_SLOTS.len() + UNARY_SLOTS.len());
        let kind = BINARY_SLOTS
            .get(slot)
            .copied()
            .unwrap_or_else(|| UNARY_SLOTS[slot - BINARY_SLOTS.len()]);
        self.operator_for(kind)
    }

    fn prefix_operator(&mut self) -> Option<Operator> {
        if !self.rng.gen_bool(self.config.p_unary_prefix) {
            return None;
        }
        let kind = *UNARY_SLOTS.choose(&mut self.rng).expect("non-empty");
        Some(self.operator_for(kind))
    }

    fn assembly_operator(&mut self) -> Operator {
        let kind = *BINARY_SLOTS.choose(&mut self.rng).expect("non-empty");
        self.operator_for(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Item {
    Op(Operator),
    Prop(u32),
}

/// Runs the three generation phases once for a fixed AP count.
pub fn generate_candidate(choices: &mut impl Choices, ap_count: usize) -> Formula {
    let props = choices.prop_order(ap_count);
    let sizes = choices.split(ap_count);
    debug_assert_eq!(sizes.iter().sum::<usize>(), ap_count);

    let mut subtrees = Vec::with_capacity(sizes.len());
    let mut offset = 0;
    for size in sizes {
        let mut items: Vec<Item> = props[offset..offset + size]
            .iter()
            .map(|&p| Item::Prop(p))
            .collect();
        offset += size;
        let mut open = size;
        while open > 1 {
            let op = choices.sublist_operator();
            if op.arity() == 2 {
                open -= 1;
            }
            items.insert(0, Item::Op(op));
        }
        if let Some(op) = choices.prefix_operator() {
            debug_assert_eq!(op.arity(), 1);
            items.insert(0, Item::Op(op));
        }
        subtrees.push(items);
    }

    let mut seq: Vec<Item> = Vec::new();
    for _ in 1..subtrees.len() {
        seq.insert(0, Item::Op(choices.assembly_operator()));
    }
    for s in subtrees {
        seq.extend(s);
    }

    let mut pos = 0;
    let f = build(&seq, &mut pos);
    debug_assert_eq!(pos, seq.len());
    f
}

fn build(items: &[Item], pos: &mut usize) -> Formula {
    let item = items[*pos];
    *pos += 1;
    match item {
        Item::Prop(p) => Formula::prop(p),
        Item::Op(op) => {
            let children = (0..op.arity()).map(|_| build(items, pos)).collect();
            Formula::node(op, children)
        }
    }
}

pub const RULE_NO_DOUBLE_NEGATION: &str = "no-consecutive-negation";
pub const RULE_STRICT_INTERVAL: &str = "strict-interval";

pub trait SanityRule: Send + Sync {
    fn id(&self) -> &'static str;
    fn check(&self, node: &Formula, path: &Path) -> Option<String>;
}

struct NoConsecutiveNegation;

impl SanityRule for NoConsecutiveNegation {
    fn id(&self) -> &'static str {
        RULE_NO_DOUBLE_NEGATION
    }

    fn check(&self, node: &Formula, _path: &Path) -> Option<String> {
        let is_not = |f: &Formula| f.operator().is_some_and(|o| o.kind == OpKind::Not);
        (is_not(node) && node.children().first().is_some_and(is_not))
            .then(|| "negation directly applied to a negation".to_string())
    }
}

struct StrictInterval;

impl SanityRule for StrictInterval {
    fn id(&self) -> &'static str {
        RULE_STRICT_INTERVAL
    }

    fn check(&self, node: &Formula, _path: &Path) -> Option<String> {
        let iv = node.operator()?.interval?;
        match iv.upper {
            Bound::Finite(upper) if iv.lower >= upper => Some(format!(
                "interval [{},{upper}] does not satisfy lower < upper",
                iv.lower
            )),
            _ => None,
        }
    }
}

fn builtin_rule(id: &str) -> Option<Box<dyn SanityRule>> {
    match id {
        RULE_NO_DOUBLE_NEGATION => Some(Box::new(NoConsecutiveNegation)),
        RULE_STRICT_INTERVAL => Some(Box::new(StrictInterval)),
        _ => None,
    }
}

/// Set of active sanity rules, keyed by id.
pub struct SanityRules {
    rules: Vec<Box<dyn SanityRule>>,
}

impl Default for SanityRules {
    fn default() -> Self {
        SanityRules::from_ids(&[RULE_NO_DOUBLE_NEGATION, RULE_STRICT_INTERVAL])
            .expect("builtin rules")
    }
}

impl SanityRules {
    pub fn from_ids<S: AsRef<str>>(ids: &[S]) -> Result<Self, SynthError> {
        let rules = ids
            .iter()
            .map(|id| {
                builtin_rule(id.as_ref()).ok_or_else(|| {
                    SynthError::ConfigInvalid(format!("unknown sanity rule `{}`", id.as_ref()))
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(SanityRules { rules })
    }

    pub fn register(&mut self, rule: Box<dyn SanityRule>) {
        self.rules.push(rule);
    }

    pub fn ids(&self) -> Vec<&'static str> {
        self.rules.iter().map(|r| r.id()).collect()
    }

    pub fn check(&self, f: &Formula) -> Vec<Violation> {
        let mut out = Vec::new();
        self.walk(f, Path::root(), &mut out);
        out
    }

    fn walk(&self, f: &Formula, path: Path, out: &mut Vec<Violation>) {
        for rule in &self.rules {
            if let Some(message) = rule.check(f, &path) {
                out.push(Violation {
                    path: path.clone(),
                    rule: rule.id(),
                    message,
                });
            }
        }
        for (i, c) in f.children().iter().enumerate() {
            self.walk(c, path.child(i), out);
        }
    }
}

/// Checks `f` against the default rules: no consecutive negations and
/// strictly increasing finite intervals.
pub fn sanity_check(f: &Formula) -> Vec<Violation> {
    SanityRules::default().check(f)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchReport {
    pub requested: usize,
    pub produced: usize,
    /// Candidates discarded by sanity rules and regenerated.
    pub rejections: usize,
    /// Rejections per rule id.
    pub rejections_by_rule: BTreeMap<String, usize>,
}

/// Seeded formula generator. Successive calls continue one random stream, so
/// the sequence of formulas depends only on the config.
pub struct Synthesizer {
    config: SynthConfig,
    rules: SanityRules,
    rng: ChaCha8Rng,
}

impl Synthesizer {
    pub fn new(config: SynthConfig) -> Result<Self, SynthError> {
        config.validate()?;
        let rules = SanityRules::from_ids(&config.forbidden_patterns)?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Synthesizer { config, rules, rng })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.config
    }

    /// Generates one acceptable formula, recording rejections in `report`.
    pub fn next_formula(&mut self, report: &mut BatchReport) -> Result<Formula, SynthError> {
        let config = &self.config;
        let mut choices = RandomChoices::new(config, &mut self.rng);
        let ap_count = choices.ap_count(config.max_aps);
        for _ in 0..config.resample_cap {
            let f = generate_candidate(&mut choices, ap_count);
            let violations = self.rules.check(&f);
            if violations.is_empty() {
                report.produced += 1;
                return Ok(f);
            }
            report.rejections += 1;
            for v in violations {
                *report.rejections_by_rule.entry(v.rule.to_string()).or_default() += 1;
            }
        }
        Err(SynthError::ResampleBudgetExhausted {
            attempts: config.resample_cap,
        })
    }
}

/// Generates a single formula from `config`.
pub fn synthesize(config: &SynthConfig) -> Result<Formula, SynthError> {
    let mut s = Synthesizer::new(config.clone())?;
    s.next_formula(&mut BatchReport::default())
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub formulas: Vec<Formula>,
    pub report: BatchReport,
}

pub fn synthesize_batch(config: &SynthConfig, count: usize) -> Result<Batch, SynthError> {
    if count < 1 {
        return Err(SynthError::ConfigInvalid("count must be at least 1".into()));
    }
    let mut s = Synthesizer::new(config.clone())?;
    let mut report = BatchReport {
        requested: count,
        ..Default::default()
    };
    let formulas = (0..count)
        .map(|_| s.next_formula(&mut report))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Batch { formulas, report })
}

/// Seed for shard `index`, derived with a splitmix64 step.
pub fn shard_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splits a batch over `shards` threads with per-shard seeds. Output is
/// ordered by shard, then by index within the shard.
pub fn synthesize_sharded(
    config: &SynthConfig,
    count: usize,
    shards: usize,
) -> Result<Batch, SynthError> {
    let shards = shards.clamp(1, count.max(1));
    let per = count.div_ceil(shards);
    let results: Vec<Result<Batch, SynthError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..shards)
            .map(|i| {
                let n = per.min(count.saturating_sub(i * per));
                let cfg = SynthConfig {
                    seed: shard_seed(config.seed, i),
                    ..config.clone()
                };
                scope.spawn(move || {
                    if n == 0 {
                        return Ok(Batch {
                            formulas: Vec::new(),
                            report: BatchReport::default(),
                        });
                    }
                    synthesize_batch(&cfg, n)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("shard panicked")).collect()
    });
    let mut all = Batch {
        formulas: Vec::with_capacity(count),
        report: BatchReport {
            requested: count,
            ..Default::default()
        },
    };
    for r in results {
        let b = r?;
        all.formulas.extend(b.formulas);
        all.report.produced += b.report.produced;
        all.report.rejections += b.report.rejections;
        for (k, v) in b.report.rejections_by_rule {
            *all.report.rejections_by_rule.entry(k).or_default() += v;
        }
    }
    Ok(all)
}
