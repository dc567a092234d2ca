//! Close order isomorphisms between word domains, the hull operator they
//! induce on intervals, coherence audits of finite collections, and the
//! extension constructions.

mod build;


pub use build::*;

use crate::arch::{arch_eq, beth_sub, ArchElement, ArchVerdict};
use crate::groups::{GroupError, Registry};
use crate::orders::{fmt_lower, fmt_upper, Extremum, Gap, Interval, OrderError, Position, Sel};
use crate::words::{
    cmp_gaps_in, cmp_pos_gap_in, cmp_pos_in, count_in, extremum, find_occurrences, is_empty_in, letter_at, project,
    WordError, WordExpr,
};
use serde_json::{json, Value};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoiError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("invalid witness: {0}")]
    BadWitness(String),
    #[error("invalid coi: {0}")]
    Invalid(String),
    #[error("no triple named {0}")]
    UnknownTriple(String),
    #[error("duplicate triple name {0}")]
    DuplicateName(String),
    #[error("construction does not apply: {0}")]
    NotApplicable(String),
    #[error("work budget exhausted: {0}")]
    Budget(String),
}

pub type Result<T, E = CoiError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// From the left word to the right word.
    Forward,
    Backward,
}

/// `coi(left, map, right)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoiTriple {
    pub name: Arc<str>,
    pub left: WordExpr,
    pub map: CoiMap,
    pub right: WordExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoiMap {
    Empty,
    /// `p -> p` on the members of a close subset; both words share positions.
    Identity(crate::orders::CloseSubsetSpec),
    Point { src: Position, dst: Position },
    /// Finitely many pieces, listed in the order of both words.
    Segs(Vec<Seg>),
    /// One piece per top-level key of an omega word or a dense shuffle.
    Family(Family),
}

/// `src_prefix ++ p -> dst_prefix ++ inner(p)` for `p` in `src_window`.
#[derive(Debug, Clone, PartialEq)]
pub struct Seg {
    pub src_prefix: Vec<Sel>,
    pub dst_prefix: Vec<Sel>,
    /// Whether both blocks sit reversed relative to the inner words.
    pub flip: bool,
    /// In the inner left word's own order.
    pub src_window: Interval,
    /// The hull of the image of `src_window`, in the inner right word's order.
    pub dst_window: Interval,
    pub inner: Arc<CoiTriple>,
}

impl Seg {
    fn ambient_window(&self) -> Interval {
        let w = if self.flip { self.src_window.reversed() } else { self.src_window.clone() };
        w.prefixed(&self.src_prefix)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKeys {
    /// Keys `w0, w1, ...` of an omega word without prefix.
    Omega,
    /// Sites `[q]` of a dense shuffle.
    Rat,
}

type PieceMaker = dyn Fn(&Sel) -> Result<Option<(Arc<CoiTriple>, bool)>> + Send + Sync;

pub struct FamilyCore {
    pub label: String,
    pub keys: FamilyKeys,
    pub src_inner: Vec<Sel>,
    pub dst_inner: Vec<Sel>,
    make: Box<PieceMaker>,
    memo: Mutex<HashMap<(Sel, bool), Option<(Arc<CoiTriple>, bool)>>>,
}

/// Key `k` maps `[k] ++ src_inner ++ p` to `[k] ++ dst_inner ++ inner_k(p)`.
#[derive(Clone)]
pub struct Family {
    core: Arc<FamilyCore>,
    inverted: bool,
}

impl Family {
    pub fn new(label: impl Into<String>, keys: FamilyKeys, src_inner: Vec<Sel>, dst_inner: Vec<Sel>, make: Box<PieceMaker>) -> Family {
        let core = FamilyCore { label: label.into(), keys, src_inner, dst_inner, make, memo: Mutex::new(HashMap::new()) };
        Family { core: Arc::new(core), inverted: false }
    }

    pub fn label(&self) -> &str {
        &self.core.label
    }
    pub fn keys(&self) -> FamilyKeys {
        self.core.keys
    }

    pub fn src_inner(&self) -> &[Sel] {
        if self.inverted {
            &self.core.dst_inner
        } else {
            &self.core.src_inner
        }
    }

    pub fn dst_inner(&self) -> &[Sel] {
        if self.inverted {
            &self.core.src_inner
        } else {
            &self.core.dst_inner
        }
    }

    fn inverse(&self) -> Family {
        Family { core: self.core.clone(), inverted: !self.inverted }
    }

    /// The piece at `key` and whether it is read reversed.
    pub fn get(&self, key: &Sel) -> Result<Option<(Arc<CoiTriple>, bool)>> {
        let slot = (key.clone(), self.inverted);
        if let Some(hit) = self.core.memo.lock().expect("memo lock").get(&slot) {
            return Ok(hit.clone());
        }
        let cached = self.core.memo.lock().expect("memo lock").get(&(key.clone(), false)).cloned();
        let base = match cached {
            Some(hit) => hit,
            None => {
                let made = (self.core.make)(key)?;
                self.core.memo.lock().expect("memo lock").insert((key.clone(), false), made.clone());
                made
            }
        };
        let out = if self.inverted { base.map(|(t, f)| (Arc::new(coi_invert(&t)), f)) } else { base };
        self.core.memo.lock().expect("memo lock").insert(slot, out.clone());
        Ok(out)
    }

    fn key_matches(&self, s: &Sel) -> bool {
        matches!((self.core.keys, s), (FamilyKeys::Omega, Sel::Omega(_)) | (FamilyKeys::Rat, Sel::Rat(_)))
    }
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Family({}{})", self.core.label, if self.inverted { ", inverted" } else { "" })
    }
}

impl PartialEq for Family {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.core, &other.core) && self.inverted == other.inverted
    }
}

fn in_window(reg: &Registry, w: &WordExpr, p: &Position, iv: &Interval) -> Result<bool> {
    Ok(cmp_pos_gap_in(reg, w, p, &iv.lo)? == Ordering::Greater && cmp_pos_gap_in(reg, w, p, &iv.hi)? == Ordering::Less)
}

/// `iota(p)`, or `None` when `p` lies outside the domain.
pub fn map_pos(reg: &Registry, t: &CoiTriple, p: &Position) -> Result<Option<Position>> {
    match &t.map {
        CoiMap::Empty => Ok(None),
        CoiMap::Identity(s) => Ok(s.contains(&p.0).then(|| p.clone())),
        CoiMap::Point { src, dst } => Ok((p == src).then(|| dst.clone())),
        CoiMap::Segs(segs) => {
            for seg in segs {
                if !p.starts_with(&seg.src_prefix) {
                    continue;
                }
                let rest = Position(p.0[seg.src_prefix.len()..].to_vec());
                if in_window(reg, &seg.inner.left, &rest, &seg.src_window)? {
                    return Ok(map_pos(reg, &seg.inner, &rest)?.map(|q| q.prefixed(&seg.dst_prefix)));
                }
            }
            Ok(None)
        }
        CoiMap::Family(f) => {
            let Some(key) = p.0.first() else { return Ok(None) };
            let rest = &p.0[1..];
            if !f.key_matches(key) || !rest.starts_with(f.src_inner()) {
                return Ok(None);
            }
            let Some((inner, _)) = f.get(key)? else { return Ok(None) };
            let q = map_pos(reg, &inner, &Position(rest[f.src_inner().len()..].to_vec()))?;
            Ok(q.map(|q| q.prefixed(f.dst_inner()).prefixed(std::slice::from_ref(key))))
        }
    }
}

/// Reads an own-order cut of a piece as a cut of the enclosing word.
fn lift(r: Gap, flip: bool, prefix: &[Sel]) -> Gap {
    let r = if flip { r.flipped() } else { r };
    r.prefixed(prefix)
}

fn lower_into(c: &Gap, n: usize, flip: bool) -> Gap {
    Gap { path: c.path[n..].to_vec(), after: c.after != flip }
}

fn nothing(lower: bool) -> Gap {
    if lower {
        Gap::end()
    } else {
        Gap::start()
    }
}

/// For an end of a hull that has no extremum: the infimum (`lower`) of the
/// image of the domain above the cut `c`, or the supremum below it.
fn image_cut(reg: &Registry, t: &CoiTriple, c: &Gap, lower: bool) -> Result<Gap> {
    match &t.map {
        CoiMap::Empty => Ok(nothing(lower)),
        CoiMap::Identity(_) => Ok(c.clone()),
        CoiMap::Point { src, dst } => {
            let side = cmp_pos_gap_in(reg, &t.left, src, c)?;
            Ok(match (lower, side) {
                (true, Ordering::Greater) => Gap::before(dst),
                (false, Ordering::Less) => Gap::after(dst),
                _ => nothing(lower),
            })
        }
        CoiMap::Segs(segs) => segs_cut(reg, t, segs, c, lower),
        CoiMap::Family(f) => family_cut(reg, t, f, c, lower),
    }
}

fn seg_bound(reg: &Registry, seg: &Seg, lower: bool) -> Result<Option<Gap>> {
    if is_empty_in(reg, &seg.inner.right, &seg.dst_window)? {
        return Ok(None);
    }
    let r = if lower != seg.flip { seg.dst_window.lo.clone() } else { seg.dst_window.hi.clone() };
    Ok(Some(lift(r, seg.flip, &seg.dst_prefix)))
}

fn segs_cut(reg: &Registry, t: &CoiTriple, segs: &[Seg], c: &Gap, lower: bool) -> Result<Gap> {
    let order: Vec<&Seg> = if lower { segs.iter().collect() } else { segs.iter().rev().collect() };
    for seg in order {
        let amb = seg.ambient_window();
        let (near, far) = if lower { (&amb.lo, &amb.hi) } else { (&amb.hi, &amb.lo) };
        let past = cmp_gaps_in(reg, &t.left, c, far)?;
        if (lower && past != Ordering::Less) || (!lower && past != Ordering::Greater) {
            continue;
        }
        let ahead = cmp_gaps_in(reg, &t.left, c, near)?;
        if (lower && ahead != Ordering::Greater) || (!lower && ahead != Ordering::Less) || !c.path.starts_with(&seg.src_prefix) {
            match seg_bound(reg, seg, lower)? {
                Some(g) => return Ok(g),
                None => continue,
            }
        }
        let own = lower_into(c, seg.src_prefix.len(), seg.flip);
        let own_lower = lower != seg.flip;
        let inner = &seg.inner;
        let r = image_cut(reg, inner, &own, own_lower)?;
        let dst = &seg.dst_window;
        let (stop, clamp) = if own_lower { (&dst.hi, &dst.lo) } else { (&dst.lo, &dst.hi) };
        let beyond = cmp_gaps_in(reg, &inner.right, &r, stop)?;
        if (own_lower && beyond != Ordering::Less) || (!own_lower && beyond != Ordering::Greater) {
            continue;
        }
        let short = cmp_gaps_in(reg, &inner.right, &r, clamp)?;
        let r = if (own_lower && short == Ordering::Less) || (!own_lower && short == Ordering::Greater) { clamp.clone() } else { r };
        return Ok(lift(r, seg.flip, &seg.dst_prefix));
    }
    Ok(nothing(lower))
}

/// Search horizon when skipping omega keys whose piece has empty image.
const KEY_SKIP: u64 = 4096;

fn key_prefix(f: &Family, key: &Sel, dst: bool) -> Vec<Sel> {
    let inner = if dst { f.dst_inner() } else { f.src_inner() };
    std::iter::once(key.clone()).chain(inner.iter().cloned()).collect()
}

fn key_bound(reg: &Registry, f: &Family, key: &Sel, lower: bool) -> Result<Option<Gap>> {
    let Some((inner, flip)) = f.get(key)? else { return Ok(None) };
    let j = varpropto_coi(reg, &inner, &Interval::full(), Direction::Forward)?;
    if is_empty_in(reg, &inner.right, &j)? {
        return Ok(None);
    }
    let r = if lower != flip { j.lo } else { j.hi };
    Ok(Some(lift(r, flip, &key_prefix(f, key, true))))
}

fn key_next(reg: &Registry, f: &Family, key: &Sel, lower: bool) -> Result<Gap> {
    match (f.keys(), key) {
        (FamilyKeys::Omega, Sel::Omega(m)) => {
            if lower {
                for k in m + 1..m + 1 + KEY_SKIP {
                    if let Some(g) = key_bound(reg, f, &Sel::Omega(k), true)? {
                        return Ok(g);
                    }
                }
                Err(CoiError::Budget(format!("no image beyond key w{m}")))
            } else {
                for k in (0..*m).rev() {
                    if let Some(g) = key_bound(reg, f, &Sel::Omega(k), false)? {
                        return Ok(g);
                    }
                }
                Ok(Gap::start())
            }
        }
        _ => Ok(Gap { path: vec![key.clone()], after: lower }),
    }
}

fn family_cut(reg: &Registry, t: &CoiTriple, f: &Family, c: &Gap, lower: bool) -> Result<Gap> {
    let Some(key) = c.path.first() else {
        if c.after == lower || f.keys() == FamilyKeys::Rat {
            return Ok(c.clone());
        }
        // An omega word: the infimum above the start is the first image, and
        // there is no greatest image below the end.
        if lower {
            return match key_bound(reg, f, &Sel::Omega(0), true)? {
                Some(g) => Ok(g),
                None => key_next(reg, f, &Sel::Omega(0), true),
            };
        }
        return Ok(Gap::end());
    };
    if !f.key_matches(key) {
        return Err(CoiError::Invalid(format!("cut {c:?} does not address a piece")));
    }
    if f.keys() == FamilyKeys::Rat && f.get(key)?.is_none() {
        return Ok(c.clone());
    }
    let block = Position(key_prefix(f, key, false));
    let (start, end) = (Gap::before(&block), Gap::after(&block));
    let at_start = cmp_gaps_in(reg, &t.left, c, &start)? != Ordering::Greater;
    let at_end = cmp_gaps_in(reg, &t.left, c, &end)? != Ordering::Less;
    if (lower && at_end) || (!lower && at_start) {
        return key_next(reg, f, key, lower);
    }
    if (lower && at_start) || (!lower && at_end) {
        return match key_bound(reg, f, key, lower)? {
            Some(g) => Ok(g),
            None => key_next(reg, f, key, lower),
        };
    }
    let Some((inner, flip)) = f.get(key)? else { return key_next(reg, f, key, lower) };
    let own = lower_into(c, block.0.len(), flip);
    let own_lower = lower != flip;
    let r = image_cut(reg, &inner, &own, own_lower)?;
    if r == nothing(own_lower) {
        return key_next(reg, f, key, lower);
    }
    Ok(lift(r, flip, &key_prefix(f, key, true)))
}

/// Budget for the letter-by-letter scan of one hull end.
const SCAN_BUDGET: usize = 1 << 16;

enum End {
    At(Position),
    Cut(Gap),
}

fn scan_end(reg: &Registry, t: &CoiTriple, cur: &mut Interval, least: bool) -> Result<Option<(End, Position)>> {
    for _ in 0..SCAN_BUDGET {
        match extremum(reg, &t.left, cur, least)? {
            Extremum::Empty => return Ok(None),
            Extremum::Unbounded => {
                let c = if least { cur.lo.clone() } else { cur.hi.clone() };
                return Ok(Some((End::Cut(c), Position::root())));
            }
            Extremum::At(p) => {
                if let Some(q) = map_pos(reg, t, &p)? {
                    return Ok(Some((End::At(q), p)));
                }
                if least {
                    cur.lo = Gap::after(&p);
                } else {
                    cur.hi = Gap::before(&p);
                }
            }
        }
    }
    Err(CoiError::Budget("hull scan".into()))
}

/// The smallest interval of the target word containing the image of the
/// domain points in `iv`.
pub fn varpropto_coi(reg: &Registry, t: &CoiTriple, iv: &Interval, dir: Direction) -> Result<Interval> {
    if dir == Direction::Backward {
        return varpropto_coi(reg, &coi_invert(t), iv, Direction::Forward);
    }
    let mut cur = iv.clone();
    let Some((lo_end, lo_src)) = scan_end(reg, t, &mut cur, true)? else { return Ok(Interval::empty()) };
    if let End::At(_) = lo_end {
        cur.lo = Gap::before(&lo_src);
    }
    let Some((hi_end, _)) = scan_end(reg, t, &mut cur, false)? else { return Ok(Interval::empty()) };
    let lo = match lo_end {
        End::At(q) => Gap::before(&q),
        End::Cut(c) => image_cut(reg, t, &c, true)?,
    };
    let hi = match hi_end {
        End::At(q) => Gap::after(&q),
        End::Cut(c) => image_cut(reg, t, &c, false)?,
    };
    Ok(Interval { lo, hi })
}

fn invert_map(m: &CoiMap) -> CoiMap {
    match m {
        CoiMap::Empty => CoiMap::Empty,
        CoiMap::Identity(s) => CoiMap::Identity(s.clone()),
        CoiMap::Point { src, dst } => CoiMap::Point { src: dst.clone(), dst: src.clone() },
        CoiMap::Segs(segs) => CoiMap::Segs(
            segs.iter()
                .map(|s| Seg {
                    src_prefix: s.dst_prefix.clone(),
                    dst_prefix: s.src_prefix.clone(),
                    flip: s.flip,
                    src_window: s.dst_window.clone(),
                    dst_window: s.src_window.clone(),
                    inner: Arc::new(coi_invert(&s.inner)),
                })
                .collect(),
        ),
        CoiMap::Family(f) => CoiMap::Family(f.inverse()),
    }
}

/// `coi(U, iota^-1, W)` from `coi(W, iota, U)`.
pub fn coi_invert(t: &CoiTriple) -> CoiTriple {
    CoiTriple { name: t.name.clone(), left: t.right.clone(), map: invert_map(&t.map), right: t.left.clone() }
}

/// Checks on the letters of degree at most `depth`: mapped letters land on
/// letters of the right word, the map preserves order, and it agrees with
/// its inverse.
pub fn check_coi(reg: &Registry, t: &CoiTriple, depth: u64) -> Result<()> {
    let inv = coi_invert(t);
    let mut prev: Option<Position> = None;
    for (p, _) in project(reg, &t.left, depth)?.0 {
        let Some(q) = map_pos(reg, t, &p)? else { continue };
        if letter_at(reg, &t.right, &q)?.is_none() {
            return Err(CoiError::Invalid(format!("{p} maps to {q}, which is not a letter")));
        }
        if map_pos(reg, &inv, &q)?.as_ref() != Some(&p) {
            return Err(CoiError::Invalid(format!("inverse does not send {q} back to {p}")));
        }
        if let Some(r) = &prev {
            if cmp_pos_in(reg, &t.right, r, &q)? != Ordering::Less {
                return Err(CoiError::Invalid(format!("order reversed at {p}")));
            }
        }
        prev = Some(q);
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoiCollection {
    pub triples: Vec<CoiTriple>,
}

impl CoiCollection {
    pub fn new() -> CoiCollection {
        CoiCollection::default()
    }

    pub fn push(&mut self, t: CoiTriple) -> Result<()> {
        if self.index_of(&t.name).is_some() {
            return Err(CoiError::DuplicateName(t.name.to_string()));
        }
        self.triples.push(t);
        Ok(())
    }

    pub fn with(&self, t: CoiTriple) -> Result<CoiCollection> {
        let mut c = self.clone();
        c.push(t)?;
        Ok(c)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.triples.iter().position(|t| &*t.name == name)
    }

    pub fn get(&self, name: &str) -> Result<&CoiTriple> {
        self.index_of(name).map(|i| &self.triples[i]).ok_or_else(|| CoiError::UnknownTriple(name.to_string()))
    }

    pub fn left_words(&self) -> Vec<WordExpr> {
        self.triples.iter().map(|t| t.left.clone()).collect()
    }

    pub fn right_words(&self) -> Vec<WordExpr> {
        self.triples.iter().map(|t| t.right.clone()).collect()
    }

    /// Every triple inverted: the same collection read from the right.
    pub fn inverted(&self) -> CoiCollection {
        CoiCollection { triples: self.triples.iter().map(coi_invert).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObligationSide {
    /// A match between left words, compared through the right words.
    Left,
    Right,
}

/// `word_{x0} on i0 == (word_{x1} on i1)^sign`, requiring the images to agree.
#[derive(Debug, Clone, PartialEq)]
pub struct Obligation {
    pub side: ObligationSide,
    pub x0: usize,
    pub i0: Interval,
    pub x1: usize,
    pub i1: Interval,
    pub sign: i8,
    pub reflexive: bool,
}

fn peel(w: &WordExpr) -> &WordExpr {
    match w {
        WordExpr::Ref(_, x) => peel(x),
        _ => w,
    }
}

/// Structural subintervals tried as match patterns: the whole word, its
/// concatenation parts, two omega tails and the halves around the first
/// shuffle sites.
pub fn candidate_intervals(reg: &Registry, w: &WordExpr) -> Result<Vec<Interval>> {
    let mut out = vec![Interval::full()];
    match peel(w) {
        WordExpr::Inv(x) => {
            for iv in candidate_intervals(reg, x)?.into_iter().skip(1) {
                out.push(iv.reversed());
            }
        }
        WordExpr::Cat(parts) if parts.len() > 1 => {
            for i in 0..parts.len() {
                out.push(Interval::point(&Position(vec![Sel::Part(i as u32)])));
            }
        }
        WordExpr::Omega(_) => {
            for m in 1..=2 {
                out.push(Interval::from(&Position(vec![Sel::Omega(m)])));
            }
        }
        WordExpr::QShuffle(rule) => {
            for (s, _) in rule.level_sites(0, None, None).into_iter().take(1) {
                let p = Position(vec![Sel::Rat(s)]);
                out.push(Interval::point(&p));
                out.push(Interval { lo: Gap::start(), hi: Gap::before(&p) });
                out.push(Interval { lo: Gap::after(&p), hi: Gap::end() });
            }
        }
        _ => {}
    }
    let mut kept = Vec::new();
    for iv in out {
        if !count_in(reg, w, &iv)?.is_finite() && !kept.contains(&iv) {
            kept.push(iv);
        }
    }
    Ok(kept)
}

/// Every match found at `depth` between candidate subwords, on both sides.
pub fn enumerate_obligations(reg: &Registry, coll: &CoiCollection, depth: u64) -> Result<Vec<Obligation>> {
    let mut out: Vec<Obligation> = Vec::new();
    for side in [ObligationSide::Left, ObligationSide::Right] {
        let words = match side {
            ObligationSide::Left => coll.left_words(),
            ObligationSide::Right => coll.right_words(),
        };
        for (x1, w1) in words.iter().enumerate() {
            for i1 in candidate_intervals(reg, w1)? {
                let base = if i1 == Interval::full() { w1.clone() } else { WordExpr::sub(w1.clone(), i1.clone()) };
                for sign in [1i8, -1] {
                    let pattern = WordExpr::power(base.clone(), sign);
                    for (x0, w0) in words.iter().enumerate() {
                        for i0 in find_occurrences(reg, &pattern, w0, depth)? {
                            let reflexive = x0 == x1 && i0 == i1 && sign == 1;
                            let ob = Obligation { side, x0, i0, x1, i1: i1.clone(), sign, reflexive };
                            if !out.contains(&ob) {
                                out.push(ob);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The two classes an obligation asks to be equal.
pub fn obligation_sides(reg: &Registry, coll: &CoiCollection, ob: &Obligation) -> Result<(ArchElement, ArchElement)> {
    let (t0, t1) = (&coll.triples[ob.x0], &coll.triples[ob.x1]);
    let (dir, w0, w1) = match ob.side {
        ObligationSide::Left => (Direction::Forward, &t0.right, &t1.right),
        ObligationSide::Right => (Direction::Backward, &t0.left, &t1.left),
    };
    let a = beth_sub(reg, w0, &varpropto_coi(reg, t0, &ob.i0, dir)?, 1)?;
    let b = beth_sub(reg, w1, &varpropto_coi(reg, t1, &ob.i1, dir)?, ob.sign)?;
    Ok((a, b))
}

pub fn discharge(reg: &Registry, coll: &CoiCollection, ob: &Obligation) -> Result<ArchVerdict> {
    let (a, b) = obligation_sides(reg, coll, ob)?;
    Ok(arch_eq(reg, &a, &b)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub depth: u64,
    pub entries: Vec<(Obligation, ArchVerdict)>,
}

impl AuditReport {
    pub fn equal(&self) -> usize {
        self.entries.iter().filter(|(_, v)| *v == ArchVerdict::Equal).count()
    }

    pub fn unknown(&self) -> usize {
        self.entries.iter().filter(|(_, v)| *v == ArchVerdict::Unknown).count()
    }

    pub fn to_json(&self, coll: &CoiCollection) -> Value {
        let obligations: Vec<Value> = self
            .entries
            .iter()
            .map(|(ob, v)| {
                json!({
                    "side": match ob.side { ObligationSide::Left => "left", ObligationSide::Right => "right" },
                    "x0": &*coll.triples[ob.x0].name,
                    "i0": {"lo": fmt_lower(&ob.i0.lo), "hi": fmt_upper(&ob.i0.hi)},
                    "x1": &*coll.triples[ob.x1].name,
                    "i1": {"lo": fmt_lower(&ob.i1.lo), "hi": fmt_upper(&ob.i1.hi)},
                    "sign": ob.sign,
                    "reflexive": ob.reflexive,
                    "verdict": match v { ArchVerdict::Equal => "equal", ArchVerdict::Unknown => "unknown" },
                })
            })
            .collect();
        json!({"depth": self.depth, "obligations": obligations, "equal": self.equal(), "unknown": self.unknown()})
    }
}

pub fn audit(reg: &Registry, coll: &CoiCollection, depth: u64) -> Result<AuditReport> {
    let mut entries = Vec::new();
    for ob in enumerate_obligations(reg, coll, depth)? {
        let v = discharge(reg, coll, &ob)?;
        entries.push((ob, v));
    }
    Ok(AuditReport { depth, entries })
}
