//! Words over a registry: finite words, lazily described infinite words, and
//! the operations that only ever look at finitely many letters at a time.

mod finite;
mod print;
mod search;
mod walk;


pub use finite::*;
pub use search::*;
pub use walk::*;

use crate::groups::{g_is_identity, g_pow, GroupError, Letter, Registry};
use crate::orders::{Gap, Interval, OrderError, Position, Sel};
use num_rational::Rational64;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error("invalid word: {0}")]
    Invalid(String),
    #[error("word is infinite: {0}")]
    Infinite(String),
    #[error("position {0} is not a letter of the word")]
    NoSuchLetter(String),
    #[error("work budget exhausted: {0}")]
    Budget(String),
}

pub type Result<T, E = WordError> = std::result::Result<T, E>;

/// `m -> a*m + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Affine {
    pub a: u64,
    pub b: u64,
}

impl Affine {
    pub fn new(a: u64, b: u64) -> Affine {
        Affine { a, b }
    }
    pub fn identity() -> Affine {
        Affine { a: 1, b: 0 }
    }
    pub fn at(&self, m: u64) -> u64 {
        self.a.saturating_mul(m).saturating_add(self.b)
    }
}

/// `m -> c*m + d`, overridden at finitely many `m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ExponentFn {
    pub c: i64,
    pub d: i64,
    pub at: BTreeMap<u64, i64>,
}

impl ExponentFn {
    pub fn constant(v: i64) -> ExponentFn {
        ExponentFn { c: 0, d: v, at: BTreeMap::new() }
    }
    pub fn eval(&self, m: u64) -> i64 {
        self.at.get(&m).copied().unwrap_or_else(|| self.c.saturating_mul(m as i64).saturating_add(self.d))
    }
}

/// Produces term `m` of a lazily defined family.
pub type TermMaker = dyn Fn(u64) -> Result<WordExpr> + Send + Sync;

pub struct LazyTerms {
    pub label: String,
    /// Lower bound for the least degree of term `m`.
    pub lb: Affine,
    make: Box<TermMaker>,
    memo: Mutex<HashMap<u64, WordExpr>>,
}

impl LazyTerms {
    pub fn new(label: impl Into<String>, lb: Affine, make: Box<TermMaker>) -> Arc<LazyTerms> {
        Arc::new(LazyTerms { label: label.into(), lb, make, memo: Mutex::new(HashMap::new()) })
    }

    pub fn get(&self, m: u64) -> Result<WordExpr> {
        if let Some(w) = self.memo.lock().expect("memo lock").get(&m) {
            return Ok(w.clone());
        }
        let w = (self.make)(m)?;
        self.memo.lock().expect("memo lock").insert(m, w.clone());
        Ok(w)
    }
}

impl fmt::Debug for LazyTerms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LazyTerms({})", self.label)
    }
}

impl PartialEq for LazyTerms {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self, other)
    }
}

/// How term `m` of an indexed family is built.
#[derive(Debug, Clone, PartialEq)]
pub enum TermRule {
    /// The canonical fresh letter of group `index(m)` raised to `exp(m)`.
    Power { index: Affine, exp: ExponentFn },
    /// The involution of group `index(m)`.
    Involution { index: Affine },
    /// `base` with every degree raised by `index(m)`.
    Shifted { base: WordExpr, index: Affine },
    /// The terminal subword of an omega word starting at tail term `from(m)`.
    Suffix { base: Arc<OmegaRule>, from: Affine },
    Seq(Vec<TermRule>),
    Lazy(Arc<LazyTerms>),
}

impl TermRule {
    pub fn term(&self, reg: &Registry, m: u64) -> Result<WordExpr> {
        match self {
            TermRule::Power { index, exp } => {
                let n = group_index(index.at(m))?;
                let h = reg.fresh(n);
                let e = exp.eval(m);
                let value = g_pow(reg.spec(n), &h.value, e)?;
                if e == 0 || g_is_identity(reg.spec(n), &value) {
                    return Err(GroupError::IdentityLetter(n).into());
                }
                Ok(WordExpr::Lit(Letter { group: n, value }))
            }
            TermRule::Involution { index } => Ok(WordExpr::Lit(reg.involution(group_index(index.at(m))?)?)),
            TermRule::Shifted { base, index } => Ok(WordExpr::Shift(Arc::new(base.clone()), group_index(index.at(m))?)),
            TermRule::Suffix { base, from } => Ok(WordExpr::Sub(
                Arc::new(WordExpr::Omega(base.clone())),
                Interval { lo: Gap { path: vec![Sel::Omega(from.at(m))], after: false }, hi: Gap::end() },
            )),
            TermRule::Seq(rules) => Ok(WordExpr::cat(rules.iter().map(|r| r.term(reg, m)).collect::<Result<Vec<_>>>()?)),
            TermRule::Lazy(l) => l.get(m),
        }
    }

    /// A lower bound, nondecreasing in `m`, for the least degree of term `m`.
    pub fn lower_bound(&self, m: u64) -> u64 {
        match self {
            TermRule::Power { index, .. } | TermRule::Involution { index } | TermRule::Shifted { index, .. } => index.at(m),
            TermRule::Suffix { base, from } => base.tail.lower_bound(from.at(m)),
            TermRule::Seq(rules) => rules.iter().map(|r| r.lower_bound(m)).min().unwrap_or(u64::MAX),
            TermRule::Lazy(l) => l.lb.at(m),
        }
    }

    fn check(&self) -> Result<()> {
        let grows = |a: &Affine| {
            if a.a == 0 {
                Err(WordError::Invalid("index map of an infinite family must be strictly increasing".into()))
            } else {
                Ok(())
            }
        };
        match self {
            TermRule::Power { index, .. } | TermRule::Involution { index } | TermRule::Shifted { index, .. } => grows(index),
            TermRule::Suffix { from, .. } => grows(from),
            TermRule::Seq(rules) if rules.is_empty() => Err(WordError::Invalid("empty term sequence".into())),
            TermRule::Seq(rules) => rules.iter().try_for_each(TermRule::check),
            TermRule::Lazy(l) => grows(&l.lb),
        }
    }
}

fn group_index(n: u64) -> Result<u32> {
    u32::try_from(n).map_err(|_| WordError::Invalid(format!("group index {n} out of range")))
}

/// `prefix_0 ... prefix_k T_0 T_1 T_2 ...`
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaRule {
    pub prefix: Vec<WordExpr>,
    pub tail: TermRule,
}

impl OmegaRule {
    pub fn new(prefix: Vec<WordExpr>, tail: TermRule) -> Result<OmegaRule> {
        tail.check()?;
        Ok(OmegaRule { prefix, tail })
    }

    /// Least `M` such that every tail term from `M` on has all degrees above `n`.
    pub fn escape(&self, n: u64) -> u64 {
        let above = |m: u64| self.tail.lower_bound(m) > n;
        if above(0) {
            return 0;
        }
        let mut hi = 1;
        while !above(hi) {
            hi = hi.saturating_mul(2);
        }
        let mut lo = hi / 2;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if above(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SignRule {
    Plus,
    Minus,
    Alternate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FiberKind {
    /// Level `m` holds every odd multiple of `(hi-lo)/2^(m+1)` above `lo`.
    Level,
    /// One dyadic site per level, enumerated breadth first.
    Enum,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FiberTail {
    pub kind: FiberKind,
    pub lo: Rational64,
    pub hi: Rational64,
    pub sign: SignRule,
}

impl FiberTail {
    fn sign_of(&self, j: i64) -> i8 {
        match self.sign {
            SignRule::Plus => 1,
            SignRule::Minus => -1,
            SignRule::Alternate if ((j - 1) / 2) % 2 == 0 => 1,
            SignRule::Alternate => -1,
        }
    }

    fn at(&self, j: i64, k: u32) -> Rational64 {
        self.lo + (self.hi - self.lo) * Rational64::new(j, 1i64 << (k + 1))
    }

    /// `(level, sign)` of the tail site `s`, if `s` is one.
    pub fn level_of(&self, s: &Rational64) -> Option<(u64, i8)> {
        if *s <= self.lo || *s >= self.hi {
            return None;
        }
        let t = (s - self.lo) / (self.hi - self.lo);
        let d = *t.denom();
        if d < 2 || (d & (d - 1)) != 0 {
            return None;
        }
        let k = d.trailing_zeros() - 1;
        let j = *t.numer();
        let m = match self.kind {
            FiberKind::Level => k as u64,
            FiberKind::Enum => (1u64 << k) - 1 + ((j - 1) / 2) as u64,
        };
        Some((m, self.sign_of(j)))
    }

    /// Sites of level `m` inside the closed range `[a, b]`, ascending.
    pub fn level_sites(&self, m: u64, a: Option<Rational64>, b: Option<Rational64>) -> Vec<(Rational64, i8)> {
        match self.kind {
            FiberKind::Enum => {
                let k = 63 - (m + 1).leading_zeros();
                let j = (2 * (m + 1 - (1u64 << k)) + 1) as i64;
                let s = self.at(j, k);
                if a.is_some_and(|a| s < a) || b.is_some_and(|b| s > b) {
                    Vec::new()
                } else {
                    vec![(s, self.sign_of(j))]
                }
            }
            FiberKind::Level => {
                if m > 60 {
                    return Vec::new();
                }
                let k = m as u32;
                let den = 1i64 << (k + 1);
                let scale = |x: Rational64| (x - self.lo) / (self.hi - self.lo) * Rational64::from_integer(den);
                let jlo = a.map_or(1, |a| {
                    let v = scale(a).ceil().to_integer();
                    v.max(1)
                });
                let jhi = b.map_or(den - 1, |b| {
                    let v = scale(b).floor().to_integer();
                    v.min(den - 1)
                });
                let mut out = Vec::new();
                let mut j = if jlo % 2 == 0 { jlo + 1 } else { jlo };
                while j <= jhi {
                    out.push((self.at(j, k), self.sign_of(j)));
                    j += 2;
                }
                out
            }
        }
    }
}

/// A dense shuffle: at each site `s` sits the block
/// `h^(A*R) (B_m)^A h^(A*R)` with `m = P(s)`, `A` the site's sign, `B_m` the
/// block word and `h^R` the optional separator of level `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct QRule {
    pub blocks: BTreeMap<u64, WordExpr>,
    pub block_tail: Option<TermRule>,
    pub fibers: BTreeMap<u64, Vec<(Rational64, i8)>>,
    pub fiber_tail: Option<FiberTail>,
    pub seps: BTreeMap<u64, (Letter, i64)>,
    pub sep_tail: Option<ExponentFn>,
}

impl QRule {
    pub fn new(
        blocks: BTreeMap<u64, WordExpr>,
        block_tail: Option<TermRule>,
        fibers: BTreeMap<u64, Vec<(Rational64, i8)>>,
        fiber_tail: Option<FiberTail>,
        seps: BTreeMap<u64, (Letter, i64)>,
        sep_tail: Option<ExponentFn>,
    ) -> Result<QRule> {
        let rule = QRule { blocks, block_tail, fibers, fiber_tail, seps, sep_tail };
        if let Some(t) = &rule.block_tail {
            t.check()?;
        }
        if let Some(ft) = &rule.fiber_tail {
            if ft.lo >= ft.hi {
                return Err(WordError::Invalid("fiber range is empty".into()));
            }
            if rule.block_tail.is_none() {
                return Err(WordError::Invalid("an infinite fiber family needs a block rule".into()));
            }
        }
        let mut seen: BTreeMap<Rational64, u64> = BTreeMap::new();
        for (m, sites) in &rule.fibers {
            if !rule.blocks.contains_key(m) && rule.block_tail.is_none() {
                return Err(WordError::Invalid(format!("fiber {m} has no block")));
            }
            for (s, sign) in sites {
                if *sign != 1 && *sign != -1 {
                    return Err(WordError::Invalid(format!("site sign must be 1 or -1, got {sign}")));
                }
                if let Some(prev) = seen.insert(*s, *m) {
                    return Err(WordError::Invalid(format!("site {s} lies in fibers {prev} and {m}")));
                }
                if let Some((lvl, _)) = rule.fiber_tail.as_ref().and_then(|t| t.level_of(s)) {
                    if lvl != *m && !rule.fibers.contains_key(&lvl) {
                        return Err(WordError::Invalid(format!("site {s} lies in fibers {m} and {lvl}")));
                    }
                }
            }
        }
        Ok(rule)
    }

    pub fn site(&self, s: &Rational64) -> Option<(u64, i8)> {
        for (m, sites) in &self.fibers {
            if let Some((_, sign)) = sites.iter().find(|(x, _)| x == s) {
                return Some((*m, *sign));
            }
        }
        let (m, sign) = self.fiber_tail.as_ref()?.level_of(s)?;
        (!self.fibers.contains_key(&m)).then_some((m, sign))
    }

    pub fn level_sites(&self, m: u64, a: Option<Rational64>, b: Option<Rational64>) -> Vec<(Rational64, i8)> {
        if let Some(sites) = self.fibers.get(&m) {
            return sites.iter().filter(|(s, _)| a.is_none_or(|a| *s >= a) && b.is_none_or(|b| *s <= b)).cloned().collect();
        }
        self.fiber_tail.as_ref().map(|t| t.level_sites(m, a, b)).unwrap_or_default()
    }

    pub fn body(&self, reg: &Registry, m: u64) -> Result<WordExpr> {
        if let Some(b) = self.blocks.get(&m) {
            return Ok(b.clone());
        }
        match &self.block_tail {
            Some(t) => t.term(reg, m),
            None => Err(WordError::Invalid(format!("no block for fiber {m}"))),
        }
    }

    pub fn separator(&self, reg: &Registry, m: u64) -> Option<(Letter, i64)> {
        if let Some(s) = self.seps.get(&m) {
            return Some(s.clone());
        }
        let e = self.sep_tail.as_ref()?.eval(m);
        Some((reg.fresh(u32::try_from(m).ok()?), e))
    }

    /// The block at a site of level `m` with sign `sign`, as a three-part word.
    pub fn block(&self, reg: &Registry, m: u64, sign: i8) -> Result<WordExpr> {
        let body = self.body(reg, m)?;
        let body = if sign < 0 { WordExpr::Inv(Arc::new(body)) } else { body };
        let sep = match self.separator(reg, m) {
            Some((h, r)) => {
                let e = r * sign as i64;
                let value = g_pow(reg.spec(h.group), &h.value, e)?;
                if e == 0 || g_is_identity(reg.spec(h.group), &value) {
                    return Err(GroupError::IdentityLetter(h.group).into());
                }
                WordExpr::Lit(Letter { group: h.group, value })
            }
            None => WordExpr::Empty,
        };
        Ok(WordExpr::Cat(Arc::from(vec![sep.clone(), body, sep])))
    }

    /// Lower bound for the least degree of any block of level `m`.
    pub fn lower_bound(&self, m: u64) -> u64 {
        let body = match (&self.block_tail, self.blocks.contains_key(&m)) {
            (Some(t), false) => t.lower_bound(m),
            _ => 0,
        };
        let sep = if self.seps.contains_key(&m) || self.sep_tail.is_some() { m } else { u64::MAX };
        body.min(sep)
    }

    /// Largest level that may hold a letter of degree at most `n`.
    pub fn levels_upto(&self, n: u64) -> u64 {
        let table_max = self.fibers.keys().chain(self.blocks.keys()).chain(self.seps.keys()).max().copied().unwrap_or(0);
        if self.fiber_tail.is_none() {
            return table_max;
        }
        let mut m = table_max + 1;
        while self.lower_bound(m) <= n {
            m += 1;
        }
        m
    }
}

/// A finite relabelling of group indices, the identity outside its keys.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Relabeling {
    pub map: BTreeMap<u32, u32>,
}

impl Relabeling {
    pub fn new(map: BTreeMap<u32, u32>) -> Result<Relabeling> {
        let keys: Vec<u32> = map.keys().copied().collect();
        let mut vals: Vec<u32> = map.values().copied().collect();
        vals.sort_unstable();
        if keys != vals {
            return Err(WordError::Invalid("relabelling must permute its support".into()));
        }
        Ok(Relabeling { map })
    }
    pub fn apply(&self, n: u32) -> u32 {
        self.map.get(&n).copied().unwrap_or(n)
    }
    pub fn inverse(&self) -> Relabeling {
        Relabeling { map: self.map.iter().map(|(k, v)| (*v, *k)).collect() }
    }
    pub fn max_key(&self) -> u32 {
        self.map.keys().max().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WordExpr {
    Empty,
    Lit(Letter),
    Cat(Arc<[WordExpr]>),
    Inv(Arc<WordExpr>),
    Omega(Arc<OmegaRule>),
    QShuffle(Arc<QRule>),
    Shift(Arc<WordExpr>, u32),
    Relabel(Arc<WordExpr>, Arc<Relabeling>),
    /// Letters of `G_{2n}` and `G_{2n+1}` become letters of `G_{2n} * G_{2n+1}`;
    /// the registry is the one the inner word is written over.
    Pair(Arc<WordExpr>, Arc<Registry>),
    /// The subword on an interval (given in the inner word's own order).
    Sub(Arc<WordExpr>, Interval),
    /// A named word; transparent for every query.
    Ref(Arc<str>, Arc<WordExpr>),
}

impl WordExpr {
    pub fn cat(parts: Vec<WordExpr>) -> WordExpr {
        WordExpr::Cat(Arc::from(parts))
    }
    pub fn inv(w: WordExpr) -> WordExpr {
        WordExpr::Inv(Arc::new(w))
    }
    pub fn sub(w: WordExpr, iv: Interval) -> WordExpr {
        WordExpr::Sub(Arc::new(w), iv)
    }
    pub fn named(name: &str, w: WordExpr) -> WordExpr {
        WordExpr::Ref(Arc::from(name), Arc::new(w))
    }
    pub fn omega(rule: OmegaRule) -> WordExpr {
        WordExpr::Omega(Arc::new(rule))
    }
    pub fn power(w: WordExpr, sign: i8) -> WordExpr {
        if sign < 0 {
            WordExpr::inv(w)
        } else {
            w
        }
    }
}

/// A finite word with the positions its letters occupy.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FiniteWord(pub Vec<(Position, Letter)>);

impl FiniteWord {
    /// Letters at positions `c0, c1, ...`, matching `WordExpr::cat` of literals.
    pub fn from_letters(letters: Vec<Letter>) -> FiniteWord {
        FiniteWord(letters.into_iter().enumerate().map(|(i, l)| (Position(vec![Sel::Part(i as u32)]), l)).collect())
    }
    pub fn letters(&self) -> Vec<Letter> {
        self.0.iter().map(|(_, l)| l.clone()).collect()
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn to_expr(&self) -> WordExpr {
        WordExpr::cat(self.0.iter().map(|(_, l)| WordExpr::Lit(l.clone())).collect())
    }
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.0
                .iter()
                .map(|(p, l)| serde_json::json!({"pos": p.to_string(), "group": l.group, "value": l.value.to_string()}))
                .collect(),
        )
    }
}
