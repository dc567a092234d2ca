//! Ordered index sets, positions inside them, interval cuts and close subsets.
//!
//! A position is a path of selectors, one per nesting level. Cuts are stored
//! as gaps: `Gap { path, after }` sits immediately before (or after) the
//! whole block addressed by `path`, in the order of the outermost structure.
//! A path that stops early addresses a whole block, so `AtOrAbove(p)` with a
//! short `p` includes everything inside `p`.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderError {
    #[error("position {pos} is not valid in {order}")]
    InvalidPosition { pos: String, order: String },
    #[error("cannot parse position `{0}`")]
    BadPosition(String),
    #[error("subset {subset} cannot be evaluated on {order}")]
    Unsupported { subset: String, order: String },
    #[error("subset {0} is not close")]
    NotClose(String),
    #[error("search budget exhausted while computing {0}")]
    Budget(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sel {
    Part(u32),
    Fin(u64),
    Omega(u64),
    OmegaRev(u64),
    Rat(Rational64),
}

impl Sel {
    fn rank(&self) -> u8 {
        match self {
            Sel::Part(_) => 0,
            Sel::Fin(_) => 1,
            Sel::Omega(_) => 2,
            Sel::OmegaRev(_) => 3,
            Sel::Rat(_) => 4,
        }
    }
}

impl Ord for Sel {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Sel::Part(a), Sel::Part(b)) => a.cmp(b),
            (Sel::Fin(a), Sel::Fin(b)) => a.cmp(b),
            (Sel::Omega(a), Sel::Omega(b)) => a.cmp(b),
            (Sel::OmegaRev(a), Sel::OmegaRev(b)) => b.cmp(a),
            (Sel::Rat(a), Sel::Rat(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Sel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Sel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sel::Part(i) => write!(f, "c{i}"),
            Sel::Fin(i) => write!(f, "f{i}"),
            Sel::Omega(n) => write!(f, "w{n}"),
            Sel::OmegaRev(n) => write!(f, "r{n}"),
            Sel::Rat(q) => write!(f, "[{}/{}]", q.numer(), q.denom()),
        }
    }
}

pub fn parse_rational(s: &str) -> Option<Rational64> {
    match s.split_once('/') {
        Some((p, q)) => {
            let q: i64 = q.trim().parse().ok()?;
            let p: i64 = p.trim().parse().ok()?;
            (q != 0).then(|| Rational64::new(p, q))
        }
        None => Some(Rational64::from_integer(s.trim().parse().ok()?)),
    }
}

impl FromStr for Sel {
    type Err = OrderError;
    fn from_str(s: &str) -> Result<Sel, OrderError> {
        let bad = || OrderError::BadPosition(s.to_string());
        if let Some(inner) = s.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
            return parse_rational(inner).map(Sel::Rat).ok_or_else(bad);
        }
        let (tag, num) = s.split_at(s.chars().next().map_or(0, |c| c.len_utf8()));
        let n: u64 = num.parse().map_err(|_| bad())?;
        match tag {
            "c" => u32::try_from(n).map(Sel::Part).map_err(|_| bad()),
            "f" => Ok(Sel::Fin(n)),
            "w" => Ok(Sel::Omega(n)),
            "r" => Ok(Sel::OmegaRev(n)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Position(pub Vec<Sel>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }
    pub fn child(&self, s: Sel) -> Position {
        let mut v = self.0.clone();
        v.push(s);
        Position(v)
    }
    pub fn prefixed(&self, prefix: &[Sel]) -> Position {
        Position(prefix.iter().chain(self.0.iter()).cloned().collect())
    }
    pub fn starts_with(&self, prefix: &[Sel]) -> bool {
        self.0.starts_with(prefix)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, ".");
        }
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "/")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Position {
    type Err = OrderError;
    fn from_str(s: &str) -> Result<Position, OrderError> {
        let s = s.trim();
        if s == "." || s.is_empty() {
            return Ok(Position::root());
        }
        let mut out = Vec::new();
        let mut depth = 0i32;
        let mut cur = String::new();
        for c in s.chars() {
            match c {
                '[' => depth += 1,
                ']' => depth -= 1,
                _ => {}
            }
            if c == '/' && depth == 0 {
                out.push(cur.parse()?);
                cur.clear();
            } else {
                cur.push(c);
            }
        }
        out.push(cur.parse()?);
        Ok(Position(out))
    }
}

/// The cut immediately before (`after == false`) or after the block at `path`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gap {
    pub path: Vec<Sel>,
    pub after: bool,
}

impl Gap {
    pub fn start() -> Gap {
        Gap { path: Vec::new(), after: false }
    }
    pub fn end() -> Gap {
        Gap { path: Vec::new(), after: true }
    }
    pub fn before(p: &Position) -> Gap {
        Gap { path: p.0.clone(), after: false }
    }
    pub fn after(p: &Position) -> Gap {
        Gap { path: p.0.clone(), after: true }
    }
    pub fn flipped(&self) -> Gap {
        Gap { path: self.path.clone(), after: !self.after }
    }
    pub fn prefixed(&self, prefix: &[Sel]) -> Gap {
        Gap { path: prefix.iter().chain(self.path.iter()).cloned().collect(), after: self.after }
    }
    /// The gap seen from inside the child reached by the first selector.
    pub fn tail(&self) -> Gap {
        Gap { path: self.path[1..].to_vec(), after: self.after }
    }
}

/// Where a gap lies relative to one child block of a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Loc {
    /// The gap comes before the whole child.
    Below,
    Inside(Gap),
    /// The gap comes after the whole child.
    Above,
}

/// Locates `g` (relative to a node) against the child at `sel`; `rev` says
/// whether the node lists its children in reverse.
pub fn locate(g: &Gap, sel: &Sel, rev: bool) -> Loc {
    match g.path.first() {
        None => {
            if g.after {
                Loc::Above
            } else {
                Loc::Below
            }
        }
        Some(s0) => {
            let ord = if rev { s0.cmp(sel) } else { sel.cmp(s0) };
            match ord {
                Ordering::Less => Loc::Above,
                Ordering::Greater => Loc::Below,
                Ordering::Equal => Loc::Inside(g.tail()),
            }
        }
    }
}

/// Compares two gaps; `rev(i)` reports whether the node reached by the first
/// `i` selectors of the common prefix lists its children in reverse.
pub fn cmp_gaps(a: &Gap, b: &Gap, rev: impl Fn(usize) -> bool) -> Ordering {
    let n = a.path.len().min(b.path.len());
    for i in 0..n {
        if a.path[i] != b.path[i] {
            let o = a.path[i].cmp(&b.path[i]);
            return if rev(i) { o.reverse() } else { o };
        }
    }
    match a.path.len().cmp(&b.path.len()) {
        Ordering::Equal => a.after.cmp(&b.after),
        Ordering::Less => {
            if a.after {
                Ordering::Greater
            } else {
                Ordering::Less
            }
        }
        Ordering::Greater => {
            if b.after {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        }
    }
}

/// Compares two positions of elements (not gaps).
pub fn cmp_positions(a: &[Sel], b: &[Sel], rev: impl Fn(usize) -> bool) -> Ordering {
    let n = a.len().min(b.len());
    for i in 0..n {
        if a[i] != b[i] {
            let o = a[i].cmp(&b[i]);
            return if rev(i) { o.reverse() } else { o };
        }
    }
    a.len().cmp(&b.len())
}

/// Where the element at `p` sits relative to gap `g`: `Less` means below it.
pub fn cmp_pos_gap(p: &[Sel], g: &Gap, rev: impl Fn(usize) -> bool) -> Ordering {
    let n = p.len().min(g.path.len());
    for i in 0..n {
        if p[i] != g.path[i] {
            let o = p[i].cmp(&g.path[i]);
            return if rev(i) { o.reverse() } else { o };
        }
    }
    if g.path.len() <= p.len() {
        if g.after {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    } else {
        // The gap sits strictly inside the element's block: treat the
        // element as occupying the block's first point.
        Ordering::Less
    }
}

/// An interval between two gaps: every element strictly between them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Gap,
    pub hi: Gap,
}

impl Interval {
    pub fn full() -> Interval {
        Interval { lo: Gap::start(), hi: Gap::end() }
    }
    pub fn empty() -> Interval {
        Interval { lo: Gap::end(), hi: Gap::start() }
    }
    pub fn closed(a: &Position, b: &Position) -> Interval {
        Interval { lo: Gap::before(a), hi: Gap::after(b) }
    }
    pub fn point(a: &Position) -> Interval {
        Interval::closed(a, a)
    }
    pub fn from(a: &Position) -> Interval {
        Interval { lo: Gap::before(a), hi: Gap::end() }
    }
    pub fn upto(b: &Position) -> Interval {
        Interval { lo: Gap::start(), hi: Gap::after(b) }
    }
    /// The same set of elements read in the reversed order.
    pub fn reversed(&self) -> Interval {
        Interval { lo: self.hi.flipped(), hi: self.lo.flipped() }
    }
    pub fn prefixed(&self, prefix: &[Sel]) -> Interval {
        Interval { lo: self.lo.prefixed(prefix), hi: self.hi.prefixed(prefix) }
    }
    pub fn is_canonical_empty(&self) -> bool {
        self == &Interval::empty()
    }
}

pub fn fmt_lower(g: &Gap) -> String {
    match (g.path.is_empty(), g.after) {
        (true, false) => "-inf".into(),
        (_, false) => format!("(>= {})", Position(g.path.clone())),
        (_, true) => format!("(> {})", Position(g.path.clone())),
    }
}

pub fn fmt_upper(g: &Gap) -> String {
    match (g.path.is_empty(), g.after) {
        (true, true) => "+inf".into(),
        (_, true) => format!("(<= {})", Position(g.path.clone())),
        (_, false) => format!("(< {})", Position(g.path.clone())),
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(interval {} {})", fmt_lower(&self.lo), fmt_upper(&self.hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Count {
    Finite(u64),
    Infinite,
}

impl Count {
    pub fn is_finite(self) -> bool {
        matches!(self, Count::Finite(_))
    }
    pub fn is_zero(self) -> bool {
        self == Count::Finite(0)
    }
    pub fn add(self, other: Count) -> Count {
        match (self, other) {
            (Count::Finite(a), Count::Finite(b)) => Count::Finite(a.saturating_add(b)),
            _ => Count::Infinite,
        }
    }
}

/// The least (or greatest) element of an interval, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extremum {
    Empty,
    At(Position),
    /// Nonempty but without a least (greatest) element.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderExpr {
    Fin(u64),
    Omega,
    OmegaRev,
    QDense,
    Cat(Vec<OrderExpr>),
    Rev(Box<OrderExpr>),
}

impl fmt::Display for OrderExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderExpr::Fin(k) => write!(f, "(fin {k})"),
            OrderExpr::Omega => write!(f, "omega"),
            OrderExpr::OmegaRev => write!(f, "omega-rev"),
            OrderExpr::QDense => write!(f, "qdense"),
            OrderExpr::Cat(parts) => {
                write!(f, "(ocat")?;
                for p in parts {
                    write!(f, " {p}")?;
                }
                write!(f, ")")
            }
            OrderExpr::Rev(x) => write!(f, "(rev {x})"),
        }
    }
}

/// Index range of a ladder leaf (`Fin`, `Omega`, `OmegaRev`): `lo..hi`,
/// where `None` means unbounded above.
type Range = (u64, Option<u64>);

fn range_is_empty(r: Range) -> bool {
    matches!(r, (a, Some(b)) if a >= b)
}

impl OrderExpr {
    /// Removes `Rev` and flattens nested `Cat`.
    pub fn normalize(&self) -> OrderExpr {
        fn go(e: &OrderExpr, rev: bool) -> OrderExpr {
            match e {
                OrderExpr::Fin(k) => OrderExpr::Fin(*k),
                OrderExpr::Omega if rev => OrderExpr::OmegaRev,
                OrderExpr::OmegaRev if rev => OrderExpr::Omega,
                OrderExpr::Omega => OrderExpr::Omega,
                OrderExpr::OmegaRev => OrderExpr::OmegaRev,
                OrderExpr::QDense => OrderExpr::QDense,
                OrderExpr::Rev(x) => go(x, !rev),
                OrderExpr::Cat(parts) => {
                    let mut out = Vec::new();
                    let iter: Box<dyn Iterator<Item = &OrderExpr>> =
                        if rev { Box::new(parts.iter().rev()) } else { Box::new(parts.iter()) };
                    for p in iter {
                        match go(p, rev) {
                            OrderExpr::Cat(inner) => out.extend(inner),
                            q => out.push(q),
                        }
                    }
                    if out.len() == 1 {
                        out.pop().unwrap()
                    } else {
                        OrderExpr::Cat(out)
                    }
                }
            }
        }
        go(self, false)
    }

    fn invalid(&self, p: &[Sel]) -> OrderError {
        OrderError::InvalidPosition { pos: Position(p.to_vec()).to_string(), order: self.to_string() }
    }

    pub fn validate_position(&self, p: &[Sel]) -> Result<(), OrderError> {
        let ok = match (self, p.first()) {
            (OrderExpr::Fin(k), Some(Sel::Fin(i))) => i < k && p.len() == 1,
            (OrderExpr::Omega, Some(Sel::Omega(_))) => p.len() == 1,
            (OrderExpr::OmegaRev, Some(Sel::OmegaRev(_))) => p.len() == 1,
            (OrderExpr::QDense, Some(Sel::Rat(_))) => p.len() == 1,
            (OrderExpr::Cat(parts), Some(Sel::Part(i))) => {
                return match parts.get(*i as usize) {
                    Some(sub) => sub.validate_position(&p[1..]).map_err(|_| self.invalid(p)),
                    None => Err(self.invalid(p)),
                }
            }
            (OrderExpr::Rev(x), _) => return x.validate_position(p),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(self.invalid(p))
        }
    }

    pub fn pos_cmp(&self, a: &Position, b: &Position) -> Result<Ordering, OrderError> {
        self.validate_position(&a.0)?;
        self.validate_position(&b.0)?;
        Ok(cmp_positions(&a.0, &b.0, |_| false))
    }

    fn ladder_range(&self, lo: &Gap, hi: &Gap) -> Result<Range, OrderError> {
        let idx = |s: &Sel| -> Result<u64, OrderError> {
            match (self, s) {
                (OrderExpr::Fin(_), Sel::Fin(i)) | (OrderExpr::Omega, Sel::Omega(i)) | (OrderExpr::OmegaRev, Sel::OmegaRev(i)) => {
                    Ok(*i)
                }
                _ => Err(self.invalid(std::slice::from_ref(s))),
            }
        };
        let cap = match self {
            OrderExpr::Fin(k) => Some(*k),
            _ => None,
        };
        if let OrderExpr::OmegaRev = self {
            // Descending ladder: the lower cut bounds n from above.
            let top: Option<u64> = match lo.path.first() {
                None if lo.after => return Ok((0, Some(0))),
                None => None,
                Some(s) => {
                    let j = idx(s)?;
                    if lo.after {
                        if j == 0 {
                            return Ok((0, Some(0)));
                        }
                        Some(j)
                    } else {
                        Some(j + 1)
                    }
                }
            };
            let bottom: u64 = match hi.path.first() {
                None if !hi.after => return Ok((0, Some(0))),
                None => 0,
                Some(s) => {
                    let j = idx(s)?;
                    if hi.after {
                        j
                    } else {
                        j + 1
                    }
                }
            };
            return Ok((bottom, top));
        }
        let a = match lo.path.first() {
            None if lo.after => return Ok((0, Some(0))),
            None => 0,
            Some(s) => idx(s)? + lo.after as u64,
        };
        let b = match hi.path.first() {
            None if !hi.after => Some(0),
            None => cap,
            Some(s) => Some(idx(s)? + hi.after as u64),
        };
        let b = match (b, cap) {
            (Some(b), Some(c)) => Some(b.min(c)),
            (b, _) => b,
        };
        Ok((a, b))
    }

    fn rat_bounds(lo: &Gap, hi: &Gap) -> Result<Option<(Option<(Rational64, bool)>, Option<(Rational64, bool)>)>, OrderError> {
        let get = |g: &Gap| -> Result<Option<Rational64>, OrderError> {
            match g.path.first() {
                None => Ok(None),
                Some(Sel::Rat(q)) => Ok(Some(*q)),
                Some(s) => Err(OrderError::InvalidPosition { pos: s.to_string(), order: "qdense".into() }),
            }
        };
        if lo.path.is_empty() && lo.after || hi.path.is_empty() && !hi.after {
            return Ok(None);
        }
        // (value, inclusive)
        let l = get(lo)?.map(|q| (q, !lo.after));
        let h = get(hi)?.map(|q| (q, hi.after));
        Ok(Some((l, h)))
    }

    pub fn count(&self, lo: &Gap, hi: &Gap) -> Result<Count, OrderError> {
        match self {
            OrderExpr::Rev(_) => self.normalize().count(lo, hi),
            OrderExpr::Cat(parts) => {
                let mut total = Count::Finite(0);
                for (i, part) in parts.iter().enumerate() {
                    if let Some((l, h)) = restrict_child(lo, hi, &Sel::Part(i as u32), false) {
                        total = total.add(part.count(&l, &h)?);
                    }
                }
                Ok(total)
            }
            OrderExpr::QDense => match Self::rat_bounds(lo, hi)? {
                None => Ok(Count::Finite(0)),
                Some((Some((a, ai)), Some((b, bi)))) => Ok(match a.cmp(&b) {
                    Ordering::Less => Count::Infinite,
                    Ordering::Equal if ai && bi => Count::Finite(1),
                    _ => Count::Finite(0),
                }),
                Some(_) => Ok(Count::Infinite),
            },
            _ => {
                let r = self.ladder_range(lo, hi)?;
                Ok(match r {
                    (a, Some(b)) => Count::Finite(b.saturating_sub(a)),
                    (_, None) => Count::Infinite,
                })
            }
        }
    }

    pub fn interval_count(&self, iv: &Interval) -> Result<Count, OrderError> {
        self.count(&iv.lo, &iv.hi)
    }

    pub fn interval_is_empty(&self, iv: &Interval) -> Result<bool, OrderError> {
        Ok(self.interval_count(iv)?.is_zero())
    }

    /// `Some(n)` when the interval is finite with `n` elements.
    pub fn interval_is_finite(&self, iv: &Interval) -> Result<Option<u64>, OrderError> {
        Ok(match self.interval_count(iv)? {
            Count::Finite(n) => Some(n),
            Count::Infinite => None,
        })
    }

    pub fn extremum(&self, lo: &Gap, hi: &Gap, least: bool) -> Result<Extremum, OrderError> {
        match self {
            OrderExpr::Rev(_) => self.normalize().extremum(lo, hi, least),
            OrderExpr::Cat(parts) => {
                let idx: Vec<usize> = if least { (0..parts.len()).collect() } else { (0..parts.len()).rev().collect() };
                for i in idx {
                    let sel = Sel::Part(i as u32);
                    if let Some((l, h)) = restrict_child(lo, hi, &sel, false) {
                        match parts[i].extremum(&l, &h, least)? {
                            Extremum::Empty => continue,
                            Extremum::At(p) => return Ok(Extremum::At(p.prefixed(&[sel]))),
                            Extremum::Unbounded => return Ok(Extremum::Unbounded),
                        }
                    }
                }
                Ok(Extremum::Empty)
            }
            OrderExpr::QDense => match Self::rat_bounds(lo, hi)? {
                None => Ok(Extremum::Empty),
                Some((l, h)) => {
                    let nonempty = match (l, h) {
                        (Some((a, ai)), Some((b, bi))) => a < b || (a == b && ai && bi),
                        _ => true,
                    };
                    if !nonempty {
                        return Ok(Extremum::Empty);
                    }
                    let end = if least { l } else { h };
                    Ok(match end {
                        Some((q, true)) => Extremum::At(Position(vec![Sel::Rat(q)])),
                        _ => Extremum::Unbounded,
                    })
                }
            },
            _ => {
                let (a, b) = self.ladder_range(lo, hi)?;
                if range_is_empty((a, b)) {
                    return Ok(Extremum::Empty);
                }
                let mk = |n: u64| -> Sel {
                    match self {
                        OrderExpr::Fin(_) => Sel::Fin(n),
                        OrderExpr::Omega => Sel::Omega(n),
                        _ => Sel::OmegaRev(n),
                    }
                };
                let descending = matches!(self, OrderExpr::OmegaRev);
                let want_small_index = least != descending;
                Ok(if want_small_index {
                    Extremum::At(Position(vec![mk(a)]))
                } else {
                    match b {
                        Some(b) => Extremum::At(Position(vec![mk(b - 1)])),
                        None => Extremum::Unbounded,
                    }
                })
            }
        }
    }

    pub fn first(&self, iv: &Interval) -> Result<Extremum, OrderError> {
        self.extremum(&iv.lo, &iv.hi, true)
    }

    pub fn last(&self, iv: &Interval) -> Result<Extremum, OrderError> {
        self.extremum(&iv.lo, &iv.hi, false)
    }

    /// Elements of a finite interval, in order.
    pub fn elements(&self, iv: &Interval, limit: usize) -> Result<Vec<Position>, OrderError> {
        let mut out = Vec::new();
        let mut cur = iv.clone();
        while out.len() < limit {
            match self.first(&cur)? {
                Extremum::At(p) => {
                    cur.lo = Gap::after(&p);
                    out.push(p);
                }
                _ => break,
            }
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        match self {
            OrderExpr::Fin(_) => true,
            OrderExpr::Cat(parts) => parts.iter().all(OrderExpr::is_finite),
            OrderExpr::Rev(x) => x.is_finite(),
            _ => false,
        }
    }
}

/// Restricts the cut pair `(lo, hi)` of a node to the child at `sel`;
/// `None` when the child lies entirely outside.
pub fn restrict_child(lo: &Gap, hi: &Gap, sel: &Sel, rev: bool) -> Option<(Gap, Gap)> {
    let l = match locate(lo, sel, rev) {
        Loc::Below => Gap::start(),
        Loc::Above => return None,
        Loc::Inside(g) => g,
    };
    let h = match locate(hi, sel, rev) {
        Loc::Above => Gap::end(),
        Loc::Below => return None,
        Loc::Inside(g) => g,
    };
    Some((l, h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DenseRule {
    All,
    Dyadic,
    DenominatorAtMost(u64),
}

impl DenseRule {
    fn contains(self, q: &Rational64) -> bool {
        match self {
            DenseRule::All => true,
            DenseRule::Dyadic => (*q.denom() as u64).is_power_of_two(),
            DenseRule::DenominatorAtMost(k) => (*q.denom() as u64) <= k,
        }
    }
    fn is_dense(self) -> bool {
        !matches!(self, DenseRule::DenominatorAtMost(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CloseSubsetSpec {
    All,
    CofiniteExcept(Vec<Position>),
    ResidueClass { modulus: u64, residue: u64 },
    PerPart(Vec<CloseSubsetSpec>),
    Dense(DenseRule),
    Finite(Vec<Position>),
}

impl fmt::Display for CloseSubsetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CloseSubsetSpec::All => write!(f, "all"),
            CloseSubsetSpec::CofiniteExcept(ps) | CloseSubsetSpec::Finite(ps) => {
                let tag = if matches!(self, CloseSubsetSpec::Finite(_)) { "finite" } else { "cofinite-except" };
                write!(f, "({tag}")?;
                for p in ps {
                    write!(f, " {p}")?;
                }
                write!(f, ")")
            }
            CloseSubsetSpec::ResidueClass { modulus, residue } => write!(f, "(residue {modulus} {residue})"),
            CloseSubsetSpec::PerPart(parts) => {
                write!(f, "(per-part")?;
                for p in parts {
                    write!(f, " {p}")?;
                }
                write!(f, ")")
            }
            CloseSubsetSpec::Dense(DenseRule::All) => write!(f, "(dense all)"),
            CloseSubsetSpec::Dense(DenseRule::Dyadic) => write!(f, "(dense dyadic)"),
            CloseSubsetSpec::Dense(DenseRule::DenominatorAtMost(k)) => write!(f, "(dense (denom-at-most {k}))"),
        }
    }
}

impl CloseSubsetSpec {
    /// Membership of the element at `path` (relative to the subset's root).
    pub fn contains(&self, path: &[Sel]) -> bool {
        match self {
            CloseSubsetSpec::All => true,
            CloseSubsetSpec::CofiniteExcept(ps) => !ps.iter().any(|p| p.0 == path),
            CloseSubsetSpec::Finite(ps) => ps.iter().any(|p| p.0 == path),
            CloseSubsetSpec::ResidueClass { modulus, residue } => path
                .iter()
                .find_map(|s| match s {
                    Sel::Fin(n) | Sel::Omega(n) | Sel::OmegaRev(n) => Some(n % modulus == *residue),
                    Sel::Rat(_) => Some(false),
                    Sel::Part(_) => None,
                })
                .unwrap_or(true),
            CloseSubsetSpec::PerPart(parts) => match path.first() {
                Some(Sel::Part(i)) => parts.get(*i as usize).is_some_and(|s| s.contains(&path[1..])),
                _ => false,
            },
            CloseSubsetSpec::Dense(rule) => path
                .iter()
                .find_map(|s| match s {
                    Sel::Rat(q) => Some(rule.contains(q)),
                    Sel::Part(_) => None,
                    _ => Some(false),
                })
                .unwrap_or(false),
        }
    }

    fn unsupported(&self, order: &OrderExpr) -> OrderError {
        OrderError::Unsupported { subset: self.to_string(), order: order.to_string() }
    }

    /// Whether every infinite interval of `order` meets the subset.
    pub fn is_close(&self, order: &OrderExpr) -> Result<bool, OrderError> {
        let order = order.normalize();
        match (self, &order) {
            (CloseSubsetSpec::All, _) | (CloseSubsetSpec::CofiniteExcept(_), _) => Ok(true),
            (CloseSubsetSpec::Finite(_), o) => Ok(o.is_finite()),
            (CloseSubsetSpec::ResidueClass { modulus, residue }, o) => {
                if *modulus == 0 || residue >= modulus {
                    return Err(self.unsupported(o));
                }
                fn leaves_ok(o: &OrderExpr) -> bool {
                    match o {
                        OrderExpr::QDense => false,
                        OrderExpr::Cat(ps) => ps.iter().all(leaves_ok),
                        _ => true,
                    }
                }
                if leaves_ok(o) {
                    Ok(true)
                } else {
                    Err(self.unsupported(o))
                }
            }
            (CloseSubsetSpec::Dense(rule), o) => {
                fn check(o: &OrderExpr, rule: DenseRule) -> Option<bool> {
                    match o {
                        OrderExpr::QDense => Some(rule.is_dense()),
                        OrderExpr::Fin(_) => Some(true),
                        OrderExpr::Cat(ps) => {
                            let mut all = true;
                            for p in ps {
                                all &= check(p, rule)?;
                            }
                            Some(all)
                        }
                        _ => None,
                    }
                }
                check(o, *rule).ok_or_else(|| self.unsupported(o))
            }
            (CloseSubsetSpec::PerPart(subs), OrderExpr::Cat(parts)) if subs.len() == parts.len() => {
                let mut all = true;
                for (s, p) in subs.iter().zip(parts) {
                    all &= s.is_close(p)?;
                }
                Ok(all)
            }
            (CloseSubsetSpec::PerPart(_), o) => Err(self.unsupported(o)),
        }
    }
}

const HULL_BUDGET: usize = 1 << 20;

/// The smallest interval of `order` containing `iv ∩ subset`.
pub fn varpropto_subset(order: &OrderExpr, subset: &CloseSubsetSpec, iv: &Interval) -> Result<Interval, OrderError> {
    if !subset.is_close(order)? {
        return Err(OrderError::NotClose(subset.to_string()));
    }
    let order = order.normalize();
    hull_by_scan(|cur, least| order.extremum(&cur.lo, &cur.hi, least), |p| subset.contains(&p.0), iv)
}

/// Shrinks `iv` from both ends until its end points are members, using an
/// extremum oracle. Ends without an extremum keep the original cut.
pub fn hull_by_scan<E>(
    mut extremum: impl FnMut(&Interval, bool) -> Result<Extremum, E>,
    mut member: impl FnMut(&Position) -> bool,
    iv: &Interval,
) -> Result<Interval, E>
where
    E: From<OrderError>,
{
    let mut cur = iv.clone();
    let mut lo = None;
    for _ in 0..HULL_BUDGET {
        match extremum(&cur, true)? {
            Extremum::Empty => return Ok(Interval::empty()),
            Extremum::Unbounded => {
                lo = Some(cur.lo.clone());
                break;
            }
            Extremum::At(p) => {
                if member(&p) {
                    lo = Some(Gap::before(&p));
                    break;
                }
                cur.lo = Gap::after(&p);
            }
        }
    }
    let lo = lo.ok_or(OrderError::Budget("hull"))?;
    cur.lo = lo.clone();
    let mut hi = None;
    for _ in 0..HULL_BUDGET {
        match extremum(&cur, false)? {
            Extremum::Empty => return Ok(Interval::empty()),
            Extremum::Unbounded => {
                hi = Some(cur.hi.clone());
                break;
            }
            Extremum::At(p) => {
                if member(&p) {
                    hi = Some(Gap::after(&p));
                    break;
                }
                cur.hi = Gap::before(&p);
            }
        }
    }
    let hi = hi.ok_or(OrderError::Budget("hull"))?;
    Ok(Interval { lo, hi })
}

/// Composes nested subsets: `inner` is read inside the order induced on
/// `outer`, by rank along ladder leaves.
pub fn nest_subsets(outer: &CloseSubsetSpec, inner: &CloseSubsetSpec) -> Result<CloseSubsetSpec, OrderError> {
    use CloseSubsetSpec as C;
    match (outer, inner) {
        (C::All, x) | (x, C::All) => Ok(x.clone()),
        (C::ResidueClass { modulus: m1, residue: r1 }, C::ResidueClass { modulus: m2, residue: r2 }) => {
            Ok(C::ResidueClass { modulus: m1 * m2, residue: r1 + m1 * r2 })
        }
        (C::PerPart(a), C::PerPart(b)) if a.len() == b.len() => {
            Ok(C::PerPart(a.iter().zip(b).map(|(x, y)| nest_subsets(x, y)).collect::<Result<_, _>>()?))
        }
        (C::Dense(DenseRule::All), C::Dense(r)) | (C::Dense(r), C::Dense(DenseRule::All)) => Ok(C::Dense(*r)),
        (C::Dense(DenseRule::Dyadic), C::Dense(DenseRule::Dyadic)) => Ok(C::Dense(DenseRule::Dyadic)),
        _ => Err(OrderError::Unsupported { subset: inner.to_string(), order: format!("nested in {outer}") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn om(n: u64) -> Position {
        Position(vec![Sel::Omega(n)])
    }

    #[test]
    fn reversed_omega_compares_from_the_top() {
        let o = OrderExpr::OmegaRev;
        let a = Position(vec![Sel::OmegaRev(3)]);
        let b = Position(vec![Sel::OmegaRev(7)]);
        assert_eq!(o.pos_cmp(&a, &b).unwrap(), Ordering::Greater);
        assert!(o.pos_cmp(&om(1), &a).is_err());
    }

    #[test]
    fn finiteness_of_intervals() {
        let o = OrderExpr::Omega;
        assert_eq!(o.interval_is_finite(&Interval::closed(&om(3), &om(9))).unwrap(), Some(7));
        assert_eq!(o.interval_is_finite(&Interval::from(&om(3))).unwrap(), None);
        let h = Position(vec![Sel::Rat(Rational64::new(1, 2))]);
        let open = Interval { lo: Gap::after(&h), hi: Gap::before(&h) };
        assert_eq!(OrderExpr::QDense.interval_is_finite(&open).unwrap(), Some(0));
        assert_eq!(OrderExpr::QDense.interval_is_finite(&Interval::point(&h)).unwrap(), Some(1));
        assert!(OrderExpr::Omega.interval_is_empty(&Interval::empty()).unwrap());
    }

    #[test]
    fn normalization_removes_reversal() {
        let e = OrderExpr::Rev(Box::new(OrderExpr::Cat(vec![OrderExpr::Omega, OrderExpr::Cat(vec![OrderExpr::Fin(2), OrderExpr::QDense])])));
        assert_eq!(e.normalize(), OrderExpr::Cat(vec![OrderExpr::QDense, OrderExpr::Fin(2), OrderExpr::OmegaRev]));
    }

    #[test]
    fn closeness_examples() {
        let ev = CloseSubsetSpec::ResidueClass { modulus: 2, residue: 0 };
        assert!(ev.is_close(&OrderExpr::Omega).unwrap());
        let two = OrderExpr::Cat(vec![OrderExpr::Omega, OrderExpr::Omega]);
        let pp = CloseSubsetSpec::PerPart(vec![CloseSubsetSpec::All, CloseSubsetSpec::CofiniteExcept(vec![])]);
        assert!(pp.is_close(&two).unwrap());
        let fin = CloseSubsetSpec::Finite(vec![om(0), om(1), om(2)]);
        assert!(!fin.is_close(&OrderExpr::Omega).unwrap());
        assert!(!CloseSubsetSpec::Dense(DenseRule::DenominatorAtMost(4)).is_close(&OrderExpr::QDense).unwrap());
        assert!(ev.is_close(&OrderExpr::QDense).is_err());
    }

    #[test]
    fn varpropto_examples() {
        let ev = CloseSubsetSpec::ResidueClass { modulus: 2, residue: 0 };
        let iv = Interval::closed(&om(3), &om(7));
        assert_eq!(varpropto_subset(&OrderExpr::Omega, &ev, &iv).unwrap(), Interval::closed(&om(4), &om(6)));
        assert_eq!(varpropto_subset(&OrderExpr::Omega, &CloseSubsetSpec::All, &iv).unwrap(), iv);
        let r3 = CloseSubsetSpec::ResidueClass { modulus: 3, residue: 0 };
        let e = varpropto_subset(&OrderExpr::Omega, &r3, &Interval::closed(&om(1), &om(2))).unwrap();
        assert!(OrderExpr::Omega.interval_is_empty(&e).unwrap());
        let fin = CloseSubsetSpec::Finite(vec![om(0)]);
        assert!(matches!(varpropto_subset(&OrderExpr::Omega, &fin, &iv), Err(OrderError::NotClose(_))));
    }

    #[test]
    fn positions_round_trip_through_text() {
        let p = Position(vec![Sel::Part(0), Sel::Omega(3), Sel::Rat(Rational64::new(-1, 2)), Sel::OmegaRev(2), Sel::Fin(1)]);
        let s = p.to_string();
        assert_eq!(s, "c0/w3/[-1/2]/r2/f1");
        assert_eq!(s.parse::<Position>().unwrap(), p);
        assert_eq!(".".parse::<Position>().unwrap(), Position::root());
    }

    #[test]
    fn block_cuts_cover_whole_blocks() {
        let o = OrderExpr::Cat(vec![OrderExpr::Fin(3), OrderExpr::Omega]);
        let whole_first = Interval { lo: Gap::start(), hi: Gap { path: vec![Sel::Part(0)], after: true } };
        assert_eq!(o.interval_count(&whole_first).unwrap(), Count::Finite(3));
        let after_first = Interval { lo: Gap { path: vec![Sel::Part(0)], after: true }, hi: Gap::end() };
        assert_eq!(o.first(&after_first).unwrap(), Extremum::At(Position(vec![Sel::Part(1), Sel::Omega(0)])));
        assert_eq!(o.last(&after_first).unwrap(), Extremum::Unbounded);
    }
}
