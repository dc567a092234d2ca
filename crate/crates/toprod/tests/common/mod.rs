//! Fixtures, random generators and brute-force oracles shared by the
//! integration tests. The oracles use only group multiplication and plain
//! loops, never the engine's own reduction or search code.
#![allow(dead_code)]

pub mod close;
pub mod cois;
pub mod phi;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;
use toprod::coi::{CoiCollection, CoiMap, CoiTriple};
use toprod::groups::{g_inv, g_is_identity, g_mul, GroupElement, GroupSpec, Letter, Registry, Side};
use toprod::orders::{CloseSubsetSpec, Interval, Position, Sel};
use toprod::words::{
    Affine, ExponentFn, FiberKind, FiberTail, FiniteWord, LazyTerms, OmegaRule, QRule, SignRule, TermRule, WordExpr,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn z() -> Registry {
    Registry::uniform(GroupSpec::InfiniteCyclic)
}

/// `{G_0, G_1}` followed by copies of `Z`.
pub fn reg2(a: GroupSpec, b: GroupSpec) -> Registry {
    Registry::new(vec![a, b], GroupSpec::InfiniteCyclic).unwrap()
}

pub fn letter(n: u32, v: i64) -> Letter {
    Letter { group: n, value: GroupElement::Int(v) }
}

pub fn lit(n: u32, v: i64) -> WordExpr {
    WordExpr::Lit(letter(n, v))
}

pub fn om(m: u64) -> Position {
    Position(vec![Sel::Omega(m)])
}

pub fn part(k: u32) -> Position {
    Position(vec![Sel::Part(k)])
}

/// `h_a h_(a+1) ...` with `h_n` the fresh letter of `G_n` raised to `e`.
pub fn powers_from(start: u64, step: u64, e: i64) -> WordExpr {
    WordExpr::omega(
        OmegaRule::new(vec![], TermRule::Power { index: Affine::new(step, start), exp: ExponentFn::constant(e) }).unwrap(),
    )
}

pub fn powers(e: i64) -> WordExpr {
    powers_from(0, 1, e)
}

pub fn identity(name: &str, w: WordExpr) -> CoiTriple {
    CoiTriple { name: name.into(), left: w.clone(), map: CoiMap::Identity(CloseSubsetSpec::All), right: w }
}

pub fn degrees(w: &FiniteWord) -> Vec<u32> {
    w.0.iter().map(|(_, l)| l.group).collect()
}

/// `W_m = h_m q_(m+1) q_(m+2) ...` with `q` the squares word.
pub fn staircase() -> (CoiCollection, WordExpr) {
    let (p, q) = (powers(1), powers(2));
    let coll = CoiCollection { triples: vec![identity("p", p), identity("q", q.clone())] };
    let terms = LazyTerms::new(
        "staircase",
        Affine::identity(),
        Box::new(move |m| Ok(WordExpr::cat(vec![lit(m as u32, 1), WordExpr::sub(q.clone(), Interval::from(&om(m + 1)))]))),
    );
    (coll, WordExpr::omega(OmegaRule::new(vec![], TermRule::Lazy(terms)).unwrap()))
}

/// Level `m` of the dyadic sites carries the tail of `powers(1)` from `m + 1`.
pub fn tails_shuffle(sign: SignRule) -> (CoiCollection, WordExpr) {
    let p = powers(1);
    let coll = CoiCollection { triples: vec![identity("p", p.clone())] };
    let terms = LazyTerms::new("tails", Affine::new(1, 1), Box::new(move |m| Ok(WordExpr::sub(p.clone(), Interval::from(&om(m + 1))))));
    let rule = QRule::new(
        Default::default(),
        Some(TermRule::Lazy(terms)),
        Default::default(),
        Some(FiberTail { kind: FiberKind::Level, lo: Rational64::from_integer(0), hi: Rational64::from_integer(1), sign }),
        Default::default(),
        None,
    )
    .unwrap();
    (coll, WordExpr::QShuffle(Arc::new(rule)))
}

/// Two left words; the shuffle puts tails of the first on even levels and
/// tails of the second on odd levels.
pub fn two_block_shuffle() -> (CoiCollection, WordExpr) {
    let (p, q) = (powers(1), powers(-1));
    let coll = CoiCollection { triples: vec![identity("p", p.clone()), identity("q", q.clone())] };
    let terms = LazyTerms::new(
        "two blocks",
        Affine::new(1, 1),
        Box::new(move |m| {
            let base = if m % 2 == 0 { p.clone() } else { q.clone() };
            Ok(WordExpr::sub(base, Interval::from(&om(m + 1))))
        }),
    );
    let rule = QRule::new(
        Default::default(),
        Some(TermRule::Lazy(terms)),
        Default::default(),
        Some(FiberTail {
            kind: FiberKind::Level,
            lo: Rational64::from_integer(0),
            hi: Rational64::from_integer(1),
            sign: SignRule::Alternate,
        }),
        Default::default(),
        None,
    )
    .unwrap();
    (coll, WordExpr::QShuffle(Arc::new(rule)))
}

/// A few small non-identity elements of a group.
pub fn small_elements(spec: &GroupSpec) -> Vec<GroupElement> {
    match spec {
        GroupSpec::InfiniteCyclic => [1, -1, 2, -2].map(GroupElement::Int).to_vec(),
        GroupSpec::FiniteCyclic(k) => (1..*k as i64).map(GroupElement::Int).collect(),
        GroupSpec::FreeProduct(l, r) => {
            let mut out = Vec::new();
            for (side, f) in [(Side::L, l), (Side::R, r)] {
                for x in small_elements(f).into_iter().take(2) {
                    out.push(GroupElement::Free(vec![(side, x)]));
                }
            }
            out
        }
    }
}

/// Every letter of groups `0..groups` with a small value.
pub fn alphabet(reg: &Registry, groups: u32) -> Vec<Letter> {
    (0..groups).flat_map(|n| small_elements(reg.spec(n)).into_iter().map(move |value| Letter { group: n, value })).collect()
}

pub fn random_letter(reg: &Registry, rng: &mut ChaCha8Rng, groups: u32) -> Letter {
    let n = rng.gen_range(0..groups);
    let els = small_elements(reg.spec(n));
    Letter { group: n, value: els[rng.gen_range(0..els.len())].clone() }
}

pub fn random_letters(reg: &Registry, rng: &mut ChaCha8Rng, max_len: usize, groups: u32) -> Vec<Letter> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| random_letter(reg, rng, groups)).collect()
}

/// A freely reduced word: no two neighbours share a group.
pub fn random_reduced(reg: &Registry, rng: &mut ChaCha8Rng, max_len: usize, groups: u32) -> Vec<Letter> {
    let len = rng.gen_range(0..=max_len);
    let mut out: Vec<Letter> = Vec::new();
    while out.len() < len {
        let l = random_letter(reg, rng, groups);
        if out.last().is_none_or(|p| p.group != l.group) {
            out.push(l);
        }
    }
    out
}

/// A word that multiplies out to the identity, built by inserting
/// cancelling runs at random places.
pub fn trivial_word(reg: &Registry, r: &mut ChaCha8Rng, runs: usize) -> Vec<Letter> {
    let mut w: Vec<Letter> = Vec::new();
    for _ in 0..runs {
        let l = random_letter(reg, r, 2);
        let spec = reg.spec(l.group);
        let mut run = vec![l.clone()];
        if let GroupSpec::FiniteCyclic(_) = spec {
            if r.gen() {
                // A three-letter run g^a g^b g^c with a + b + c = 0.
                let m = random_letter(reg, r, 2);
                if m.group == l.group {
                    let rest = g_inv(spec, &g_mul(spec, &l.value, &m.value).unwrap()).unwrap();
                    if !reg.is_identity(l.group, &rest) {
                        run = vec![l.clone(), m, Letter { group: l.group, value: rest }];
                        let at = r.gen_range(0..=w.len());
                        w.splice(at..at, run);
                        continue;
                    }
                }
            }
        }
        run.push(Letter { group: l.group, value: g_inv(spec, &l.value).unwrap() });
        let at = r.gen_range(0..=w.len());
        w.splice(at..at, run);
    }
    w
}

/// Free reduction by rescanning from the left after every merge.
pub fn oracle_reduce(reg: &Registry, w: &[Letter]) -> Vec<Letter> {
    let mut w = w.to_vec();
    'scan: loop {
        for i in 0..w.len().saturating_sub(1) {
            if let Some(next) = merge(reg, &w, i) {
                w.splice(i..i + 2, next);
                continue 'scan;
            }
        }
        return w;
    }
}

fn merge(reg: &Registry, w: &[Letter], i: usize) -> Option<Vec<Letter>> {
    if w[i].group != w[i + 1].group {
        return None;
    }
    let spec = reg.spec(w[i].group);
    let v = g_mul(spec, &w[i].value, &w[i + 1].value).unwrap();
    Some(if g_is_identity(spec, &v) { vec![] } else { vec![Letter { group: w[i].group, value: v }] })
}

/// Every normal form reachable by merging neighbours in any order.
pub fn all_normal_forms(reg: &Registry, w: &[Letter]) -> BTreeSet<Vec<Letter>> {
    let mut seen: HashSet<Vec<Letter>> = HashSet::new();
    let mut stack = vec![w.to_vec()];
    let mut out = BTreeSet::new();
    while let Some(cur) = stack.pop() {
        if !seen.insert(cur.clone()) {
            continue;
        }
        let mut terminal = true;
        for i in 0..cur.len().saturating_sub(1) {
            if let Some(next) = merge(reg, &cur, i) {
                terminal = false;
                let mut v = cur.clone();
                v.splice(i..i + 2, next);
                stack.push(v);
            }
        }
        if terminal {
            out.insert(cur);
        }
    }
    out
}

pub fn oracle_inverse(reg: &Registry, w: &[Letter]) -> Vec<Letter> {
    w.iter().rev().map(|l| Letter { group: l.group, value: g_inv(reg.spec(l.group), &l.value).unwrap() }).collect()
}

/// Contiguous windows of `degrees` equal to `profile`, by trying every start.
pub fn oracle_windows(profile: &[u64], degrees: &[u64]) -> Vec<Vec<usize>> {
    if profile.is_empty() || profile.len() > degrees.len() {
        return Vec::new();
    }
    (0..=degrees.len() - profile.len())
        .filter(|&i| degrees[i..i + profile.len()] == *profile)
        .map(|i| (i..i + profile.len()).collect())
        .collect()
}

pub fn finite_expr(letters: &[Letter]) -> WordExpr {
    WordExpr::cat(letters.iter().cloned().map(WordExpr::Lit).collect())
}

/// An expression word over `z()` together with a direct description of its
/// letters, used as a projection oracle.
#[derive(Debug, Clone)]
pub enum Shape {
    Lit(u32, i64),
    /// `g_start^e g_(start+step)^e ...`
    Powers { start: u64, step: u64, e: i64 },
    /// `g_a g_b^-1` followed by `g_start^2 g_(start+1)^2 ...`
    Prefixed { a: u32, b: u32, start: u64 },
    /// `g_m g_(m+1) ...`, cut from the powers word.
    Tail(u64),
    Cat(Vec<Shape>),
    Inv(Box<Shape>),
    Shift(Box<Shape>, u32),
}

impl Shape {
    pub fn expr(&self) -> WordExpr {
        match self {
            Shape::Lit(n, v) => lit(*n, *v),
            Shape::Powers { start, step, e } => powers_from(*start, *step, *e),
            Shape::Prefixed { a, b, start } => {
                let tail = TermRule::Power { index: Affine::new(1, *start), exp: ExponentFn::constant(2) };
                WordExpr::omega(OmegaRule::new(vec![lit(*a, 1), lit(*b, -1)], tail).unwrap())
            }
            Shape::Tail(m) => WordExpr::sub(powers(1), Interval::from(&om(*m))),
            Shape::Cat(parts) => WordExpr::cat(parts.iter().map(Shape::expr).collect()),
            Shape::Inv(x) => WordExpr::inv(x.expr()),
            Shape::Shift(x, k) => WordExpr::Shift(Arc::new(x.expr()), *k),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Shape::Lit(..) => true,
            Shape::Powers { .. } | Shape::Prefixed { .. } | Shape::Tail(_) => false,
            Shape::Cat(parts) => parts.iter().all(Shape::is_finite),
            Shape::Inv(x) | Shape::Shift(x, _) => x.is_finite(),
        }
    }

    /// The letters of degree at most `n`, in order.
    pub fn project(&self, n: u64) -> Vec<Letter> {
        let upto = |from: u64, step: u64, e: i64| -> Vec<Letter> {
            (0..).map(|k| from + k * step).take_while(|&g| g <= n).map(|g| letter(g as u32, e)).collect()
        };
        match self {
            Shape::Lit(g, v) => if u64::from(*g) <= n { vec![letter(*g, *v)] } else { vec![] },
            Shape::Powers { start, step, e } => upto(*start, *step, *e),
            Shape::Prefixed { a, b, start } => {
                let mut out: Vec<Letter> =
                    [letter(*a, 1), letter(*b, -1)].into_iter().filter(|l| u64::from(l.group) <= n).collect();
                out.extend(upto(*start, 1, 2));
                out
            }
            Shape::Tail(m) => upto(*m, 1, 1),
            Shape::Cat(parts) => parts.iter().flat_map(|p| p.project(n)).collect(),
            Shape::Inv(x) => x.project(n).into_iter().rev().map(|l| letter(l.group, -int(&l.value))).collect(),
            Shape::Shift(x, k) => match n.checked_sub(u64::from(*k)) {
                Some(m) => x.project(m).into_iter().map(|l| letter(l.group + k, int(&l.value))).collect(),
                None => vec![],
            },
        }
    }
}

fn int(v: &GroupElement) -> i64 {
    match v {
        GroupElement::Int(x) => *x,
        GroupElement::Free(_) => panic!("cyclic value expected"),
    }
}

pub fn random_shape(rng: &mut ChaCha8Rng, size: u32) -> Shape {
    if size == 0 || rng.gen_bool(0.35) {
        return match rng.gen_range(0..4) {
            0 => Shape::Lit(rng.gen_range(0..5), if rng.gen() { 1 } else { -2 }),
            1 => Shape::Powers { start: rng.gen_range(0..4), step: rng.gen_range(1..3), e: if rng.gen() { 1 } else { -1 } },
            2 => Shape::Prefixed { a: rng.gen_range(0..3), b: rng.gen_range(3..6), start: rng.gen_range(1..4) },
            _ => Shape::Tail(rng.gen_range(0..5)),
        };
    }
    match rng.gen_range(0..4) {
        0 | 1 => Shape::Cat((0..rng.gen_range(2..4)).map(|_| random_shape(rng, size - 1)).collect()),
        2 => Shape::Inv(Box::new(random_shape(rng, size - 1))),
        _ => Shape::Shift(Box::new(random_shape(rng, size - 1)), rng.gen_range(1..3)),
    }
}
