//! A sampled model of concatenated ladder and dense orders. Elements are
//! keyed by `(part, rational)`; ladders are sampled up to `TOP`, dense parts
//! at denominators up to 16. Random end points stay far below `TOP`.

use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use toprod::orders::{
    nest_subsets, varpropto_subset, CloseSubsetSpec, Count, DenseRule, Gap, Interval, OrderExpr, Position, Sel,
};

pub const TOP: u64 = 400;
const LOW: u64 = 40;
const WINDOW: u64 = 50;
const WINDOWS: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Leaf {
    Fin(u64),
    Omega,
    OmegaRev,
    Dense,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub leaves: Vec<Leaf>,
    pub universe: Vec<Position>,
}

fn rat(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn leaf_key(s: &Sel) -> Rational64 {
    match s {
        Sel::Fin(n) | Sel::Omega(n) => Rational64::from_integer(*n as i64),
        Sel::OmegaRev(n) => Rational64::from_integer(-(*n as i64)),
        Sel::Rat(q) => *q,
        Sel::Part(_) => panic!("part selector in leaf position"),
    }
}

pub fn key(p: &Position) -> (u32, Rational64) {
    match p.0.as_slice() {
        [Sel::Part(i), s] => (*i, leaf_key(s)),
        _ => panic!("not a model position: {p}"),
    }
}

/// Whether the element sits above the cut.
pub fn above(x: &Position, g: &Gap) -> bool {
    if g.path.is_empty() {
        return !g.after;
    }
    match key(x).cmp(&key(&Position(g.path.clone()))) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => !g.after,
    }
}

pub fn inside(iv: &Interval, x: &Position) -> bool {
    above(x, &iv.lo) && !above(x, &iv.hi)
}

fn at(i: usize, s: Sel) -> Position {
    Position(vec![Sel::Part(i as u32), s])
}

impl Model {
    pub fn new(leaves: Vec<Leaf>) -> Model {
        let mut universe = Vec::new();
        for (i, leaf) in leaves.iter().enumerate() {
            match leaf {
                Leaf::Fin(k) => universe.extend((0..*k).map(|n| at(i, Sel::Fin(n)))),
                Leaf::Omega => universe.extend((0..TOP).map(|n| at(i, Sel::Omega(n)))),
                Leaf::OmegaRev => universe.extend((0..TOP).map(|n| at(i, Sel::OmegaRev(n)))),
                Leaf::Dense => {
                    let mut qs: Vec<Rational64> =
                        (1..=16i64).flat_map(|d| (-3 * d..=3 * d).map(move |n| rat(n, d))).collect();
                    qs.sort();
                    qs.dedup();
                    universe.extend(qs.into_iter().map(|q| at(i, Sel::Rat(q))));
                }
            }
        }
        universe.sort_by_key(key);
        Model { leaves, universe }
    }

    pub fn random(rng: &mut ChaCha8Rng, dense: bool) -> Model {
        let n = rng.gen_range(2..=4);
        let leaves = (0..n)
            .map(|_| match rng.gen_range(0..if dense { 4 } else { 3 }) {
                0 => Leaf::Fin(rng.gen_range(1..=4)),
                1 => Leaf::Omega,
                2 => Leaf::OmegaRev,
                _ => Leaf::Dense,
            })
            .collect();
        Model::new(leaves)
    }

    pub fn order(&self) -> OrderExpr {
        OrderExpr::Cat(
            self.leaves
                .iter()
                .map(|l| match l {
                    Leaf::Fin(k) => OrderExpr::Fin(*k),
                    Leaf::Omega => OrderExpr::Omega,
                    Leaf::OmegaRev => OrderExpr::OmegaRev,
                    Leaf::Dense => OrderExpr::QDense,
                })
                .collect(),
        )
    }

    pub fn has_dense(&self) -> bool {
        self.leaves.contains(&Leaf::Dense)
    }

    fn random_leaf_sel(&self, rng: &mut ChaCha8Rng, i: usize) -> Sel {
        match self.leaves[i] {
            Leaf::Fin(k) => Sel::Fin(rng.gen_range(0..k)),
            Leaf::Omega => Sel::Omega(rng.gen_range(0..LOW)),
            Leaf::OmegaRev => Sel::OmegaRev(rng.gen_range(0..LOW)),
            Leaf::Dense => {
                let d = *[1i64, 2, 3, 4].choose(rng).unwrap();
                Sel::Rat(rat(rng.gen_range(-2 * d..=2 * d), d))
            }
        }
    }

    pub fn random_position(&self, rng: &mut ChaCha8Rng) -> Position {
        let i = rng.gen_range(0..self.leaves.len());
        at(i, self.random_leaf_sel(rng, i))
    }

    pub fn random_interval(&self, rng: &mut ChaCha8Rng) -> Interval {
        let cut = |rng: &mut ChaCha8Rng, end: Gap| match rng.gen_range(0..5) {
            0 => end,
            1 | 2 => Gap::before(&self.random_position(rng)),
            _ => Gap::after(&self.random_position(rng)),
        };
        let lo = cut(rng, Gap::start());
        let hi = cut(rng, Gap::end());
        Interval { lo, hi }
    }

    /// A random subset from the rule family: close ones mostly, with some
    /// non-close members for the closeness check.
    pub fn random_subset(&self, rng: &mut ChaCha8Rng) -> CloseSubsetSpec {
        let dense_only = self.leaves.iter().all(|l| matches!(l, Leaf::Dense | Leaf::Fin(_)));
        match rng.gen_range(0..6) {
            0 => CloseSubsetSpec::All,
            1 => CloseSubsetSpec::CofiniteExcept((0..rng.gen_range(1..4)).map(|_| self.random_position(rng)).collect()),
            2 if !self.has_dense() => {
                let modulus = rng.gen_range(1..=5);
                CloseSubsetSpec::ResidueClass { modulus, residue: rng.gen_range(0..modulus) }
            }
            3 if dense_only => CloseSubsetSpec::Dense(random_rule(rng)),
            _ => CloseSubsetSpec::PerPart((0..self.leaves.len()).map(|i| self.random_leaf_subset(rng, i)).collect()),
        }
    }

    fn random_leaf_subset(&self, rng: &mut ChaCha8Rng, i: usize) -> CloseSubsetSpec {
        let pick = rng.gen_range(0..4);
        let point = |rng: &mut ChaCha8Rng| Position(vec![self.random_leaf_sel(rng, i)]);
        match (self.leaves[i], pick) {
            (_, 0) => CloseSubsetSpec::All,
            (Leaf::Dense, 1) => CloseSubsetSpec::Dense(random_rule(rng)),
            (Leaf::Dense, _) => CloseSubsetSpec::CofiniteExcept(vec![point(rng)]),
            (_, 1) if rng.gen_bool(0.2) => CloseSubsetSpec::Finite(vec![point(rng), point(rng)]),
            (_, 1 | 2) => {
                let modulus = rng.gen_range(1..=5);
                CloseSubsetSpec::ResidueClass { modulus, residue: rng.gen_range(0..modulus) }
            }
            _ => CloseSubsetSpec::CofiniteExcept(vec![point(rng), point(rng)]),
        }
    }

    /// Exact closeness: ladder parts need members arbitrarily high, dense
    /// parts need members at arbitrarily fine dyadic scales.
    pub fn close(&self, s: &CloseSubsetSpec) -> bool {
        self.leaves.iter().enumerate().all(|(i, leaf)| match leaf {
            Leaf::Fin(_) => true,
            Leaf::Omega => (TOP - 100..TOP).any(|n| member(s, &at(i, Sel::Omega(n)))),
            Leaf::OmegaRev => (TOP - 100..TOP).any(|n| member(s, &at(i, Sel::OmegaRev(n)))),
            Leaf::Dense => (-47..=47i64).step_by(2).all(|n| member(s, &at(i, Sel::Rat(rat(n, 16))))),
        })
    }

    pub fn count(&self, pred: impl Fn(&Position) -> bool) -> Count {
        if self.infinite(&pred) {
            Count::Infinite
        } else {
            Count::Finite(self.universe.iter().filter(|x| pred(x)).count() as u64)
        }
    }

    /// Whether the convex set described by `pred` is infinite.
    pub fn infinite(&self, pred: impl Fn(&Position) -> bool) -> bool {
        self.leaves.iter().enumerate().any(|(i, leaf)| match leaf {
            Leaf::Fin(_) => false,
            Leaf::Omega => pred(&at(i, Sel::Omega(TOP - 1))),
            Leaf::OmegaRev => pred(&at(i, Sel::OmegaRev(TOP - 1))),
            Leaf::Dense => self.universe.iter().filter(|x| key(x).0 == i as u32 && pred(x)).take(2).count() == 2,
        })
    }

    /// Checks that a convex infinite set meets `s` infinitely often: every
    /// one of several successive index windows on each ladder tail holds a
    /// member, and twenty nested dense subintervals each hold one.
    pub fn meets_infinitely(&self, s: &CloseSubsetSpec, pred: impl Fn(&Position) -> bool) -> Result<(), String> {
        for (i, leaf) in self.leaves.iter().enumerate() {
            let mk: fn(u64) -> Sel = match leaf {
                Leaf::Omega => Sel::Omega,
                Leaf::OmegaRev => Sel::OmegaRev,
                Leaf::Dense => {
                    let pts: Vec<Rational64> = self
                        .universe
                        .iter()
                        .filter(|x| key(x).0 == i as u32 && pred(x))
                        .map(|x| key(x).1)
                        .collect();
                    if pts.len() >= 2 {
                        let (mut a, b0) = (pts[0], pts[1]);
                        let mut b = b0;
                        for round in 0..20 {
                            let c = dyadic_between(&a, &b).ok_or("no dyadic between")?;
                            let found = member(s, &at(i, Sel::Rat(c)))
                                || member(s, &at(i, Sel::Rat((a + c) / 2)))
                                || member(s, &at(i, Sel::Rat((c + b) / 2)));
                            if !found {
                                return Err(format!("dense part {i}: no member near {c} in round {round}"));
                            }
                            (a, b) = if round % 2 == 0 { (a, c) } else { (c, b) };
                        }
                    }
                    continue;
                }
                Leaf::Fin(_) => continue,
            };
            if !pred(&at(i, mk(TOP - 1))) {
                continue;
            }
            let n0 = (0..TOP).find(|&n| pred(&at(i, mk(n)))).unwrap();
            for j in 0..WINDOWS {
                let lo = n0 + WINDOW * j;
                if !(lo..lo + WINDOW).any(|n| pred(&at(i, mk(n))) && member(s, &at(i, mk(n)))) {
                    return Err(format!("part {i}: window from {lo} has no member of {s}"));
                }
            }
        }
        Ok(())
    }

    /// The hull of `iv ∩ s`, element by element. On dense parts any element
    /// of `iv` strictly beyond `x` witnesses a member, as `s` is close.
    pub fn hull_oracle(&self, s: &CloseSubsetSpec, iv: &Interval) -> Vec<bool> {
        let inside_iv: Vec<bool> = self.universe.iter().map(|x| inside(iv, x)).collect();
        let n = self.universe.len();
        let witness = |j: usize, strict: bool| -> bool {
            let x = &self.universe[j];
            inside_iv[j] && (member(s, x) || (strict && matches!(self.leaves[key(x).0 as usize], Leaf::Dense)))
        };
        // below[j]: some member at or below j; above[j]: some member at or above j.
        let dense = |j: usize| matches!(self.leaves[key(&self.universe[j]).0 as usize], Leaf::Dense);
        let is_cut = |g: &Gap, j: usize| g.path == self.universe[j].0;
        // Unsampled ladder tails beyond the top sample hold members when present.
        let tail = |j: usize, s: fn(u64) -> Sel| inside_iv[j] && self.universe[j].0[1] == s(TOP - 1);
        let mut below = vec![false; n];
        let mut seen = false;
        for j in 0..n {
            seen = seen || tail(j, Sel::OmegaRev);
            let open_below = dense(j) && inside_iv[j] && !is_cut(&iv.lo, j);
            below[j] = seen || witness(j, false) || open_below;
            seen = seen || witness(j, true);
        }
        let mut above = vec![false; n];
        seen = false;
        for j in (0..n).rev() {
            seen = seen || tail(j, Sel::Omega);
            let open_above = dense(j) && inside_iv[j] && !is_cut(&iv.hi, j);
            above[j] = seen || witness(j, false) || open_above;
            seen = seen || witness(j, true);
        }
        (0..n).map(|j| inside_iv[j] && below[j] && above[j]).collect()
    }

    pub fn same_set(&self, a: &Interval, expected: &[bool]) -> Result<(), String> {
        for (x, want) in self.universe.iter().zip(expected) {
            if inside(a, x) != *want {
                return Err(format!("{x}: expected membership {want} in {a:?}"));
            }
        }
        Ok(())
    }
}

fn random_rule(rng: &mut ChaCha8Rng) -> DenseRule {
    match rng.gen_range(0..5) {
        0 => DenseRule::All,
        1 => DenseRule::DenominatorAtMost(rng.gen_range(1..=8)),
        _ => DenseRule::Dyadic,
    }
}

fn dyadic_between(a: &Rational64, b: &Rational64) -> Option<Rational64> {
    for k in 0..40 {
        let d = 1i64 << k;
        let c = rat((a * d).floor().to_integer() + 1, d);
        if c > *a && c < *b {
            return Some(c);
        }
    }
    None
}

/// Subset membership, written out independently of the engine.
pub fn member(s: &CloseSubsetSpec, x: &Position) -> bool {
    fn leaf_of(p: &[Sel]) -> &Sel {
        p.iter().find(|s| !matches!(s, Sel::Part(_))).expect("a leaf selector")
    }
    match s {
        CloseSubsetSpec::All => true,
        CloseSubsetSpec::CofiniteExcept(ps) => !ps.contains(x),
        CloseSubsetSpec::Finite(ps) => ps.contains(x),
        CloseSubsetSpec::ResidueClass { modulus, residue } => match leaf_of(&x.0) {
            Sel::Fin(n) | Sel::Omega(n) | Sel::OmegaRev(n) => n % modulus == *residue,
            _ => false,
        },
        CloseSubsetSpec::PerPart(parts) => match x.0.first() {
            Some(Sel::Part(i)) => member(&parts[*i as usize], &Position(x.0[1..].to_vec())),
            _ => false,
        },
        CloseSubsetSpec::Dense(rule) => match leaf_of(&x.0) {
            Sel::Rat(q) => match rule {
                DenseRule::All => true,
                DenseRule::Dyadic => (*q.denom() as u64).is_power_of_two(),
                DenseRule::DenominatorAtMost(k) => (*q.denom() as u64) <= *k,
            },
            _ => false,
        },
    }
}

/// Membership in `nest(outer, inner)`: `inner` read on ranks among the
/// members of `outer` along each ladder part.
pub fn nested_member(m: &Model, outer: &CloseSubsetSpec, inner: &CloseSubsetSpec, x: &Position) -> bool {
    if !member(outer, x) {
        return false;
    }
    let (i, _) = key(x);
    let leaf = &x.0[1];
    let ranked = |n: u64, mk: fn(u64) -> Sel| -> Position {
        let rank = (0..n).filter(|&j| member(outer, &at(i as usize, mk(j)))).count() as u64;
        at(i as usize, mk(rank))
    };
    let y = match (m.leaves[i as usize], leaf) {
        (Leaf::Fin(_), Sel::Fin(n)) => ranked(*n, Sel::Fin),
        (Leaf::Omega, Sel::Omega(n)) => ranked(*n, Sel::Omega),
        (Leaf::OmegaRev, Sel::OmegaRev(n)) => ranked(*n, Sel::OmegaRev),
        _ => x.clone(),
    };
    member(inner, &y)
}

/// One randomized instance of each close-order property. Each returns
/// `Ok(false)` when the drawn instance does not meet the hypotheses.
pub mod props {
    use super::*;

    pub fn close_means_infinitely_many(rng: &mut ChaCha8Rng) -> Result<bool, String> {
        let m = Model::random(rng, true);
        let s = m.random_subset(rng);
        let order = m.order();
        let Ok(engine_close) = s.is_close(&order) else { return Ok(false) };
        if engine_close != m.close(&s) {
            return Err(format!("is_close({s}) on {order} = {engine_close}"));
        }
        if !engine_close {
            return Ok(false);
        }
        let iv = m.random_interval(rng);
        if order.interval_count(&iv).map_err(|e| e.to_string())? != Count::Infinite {
            return Ok(false);
        }
        m.meets_infinitely(&s, |x| inside(&iv, x))?;
        Ok(true)
    }

    pub fn nested_close_is_close(rng: &mut ChaCha8Rng) -> Result<bool, String> {
        let m = Model::random(rng, true);
        let (outer, inner) = (m.random_subset(rng), m.random_subset(rng));
        let order = m.order();
        if outer.is_close(&order) != Ok(true) || inner.is_close(&order) != Ok(true) {
            return Ok(false);
        }
        let Ok(nested) = nest_subsets(&outer, &inner) else { return Ok(false) };
        for x in &m.universe {
            if member(&nested, x) != nested_member(&m, &outer, &inner, x) {
                return Err(format!("nest({outer}, {inner}) disagrees at {x}"));
            }
        }
        if nested.is_close(&order) != Ok(true) || !m.close(&nested) {
            return Err(format!("nest({outer}, {inner}) = {nested} is not close in {order}"));
        }
        let iv = m.random_interval(rng);
        if m.infinite(|x| inside(&iv, x)) {
            m.meets_infinitely(&nested, |x| inside(&iv, x))?;
        }
        Ok(true)
    }

    pub fn restriction_stays_close(rng: &mut ChaCha8Rng) -> Result<bool, String> {
        let m = Model::random(rng, true);
        let s = m.random_subset(rng);
        let order = m.order();
        if s.is_close(&order) != Ok(true) {
            return Ok(false);
        }
        let i0 = m.random_interval(rng);
        let hull = varpropto_subset(&order, &s, &i0).map_err(|e| e.to_string())?;
        m.same_set(&hull, &m.hull_oracle(&s, &i0))?;
        let j = m.random_interval(rng);
        let both = |x: &Position| inside(&i0, x) && inside(&j, x);
        if m.infinite(both) {
            m.meets_infinitely(&s, both)?;
        }
        Ok(true)
    }

    pub fn hull_inside_and_idempotent(rng: &mut ChaCha8Rng) -> Result<bool, String> {
        let m = Model::random(rng, true);
        let s = m.random_subset(rng);
        let order = m.order();
        if s.is_close(&order) != Ok(true) {
            return Ok(false);
        }
        let iv = m.random_interval(rng);
        let hull = varpropto_subset(&order, &s, &iv).map_err(|e| e.to_string())?;
        for x in &m.universe {
            if inside(&hull, x) && !inside(&iv, x) {
                return Err(format!("{x} in the hull but not in {iv:?}"));
            }
        }
        let again = varpropto_subset(&order, &s, &hull).map_err(|e| e.to_string())?;
        let expected: Vec<bool> = m.universe.iter().map(|x| inside(&hull, x)).collect();
        m.same_set(&again, &expected)?;
        Ok(true)
    }

    pub fn complement_pieces_finite(rng: &mut ChaCha8Rng) -> Result<bool, String> {
        let m = Model::random(rng, true);
        let s = m.random_subset(rng);
        let order = m.order();
        if s.is_close(&order) != Ok(true) {
            return Ok(false);
        }
        let iv = m.random_interval(rng);
        let hull = varpropto_subset(&order, &s, &iv).map_err(|e| e.to_string())?;
        let finite = |x: &Interval| order.interval_is_finite(x).map(|c| c.is_some()).map_err(|e| e.to_string());
        if !m.universe.iter().any(|x| inside(&hull, x)) {
            if !finite(&iv)? || m.infinite(|x| inside(&iv, x)) {
                return Err(format!("{iv:?} misses {s} but is infinite"));
            }
            return Ok(true);
        }
        let initial = Interval { lo: iv.lo.clone(), hi: hull.lo.clone() };
        let terminal = Interval { lo: hull.hi.clone(), hi: iv.hi.clone() };
        for piece in [&initial, &terminal] {
            if !finite(piece)? || m.infinite(|x| inside(piece, x)) {
                return Err(format!("complement piece {piece:?} of {iv:?} is infinite"));
            }
        }
        for x in m.universe.iter().filter(|x| inside(&iv, x)) {
            let hits = [&initial, &hull, &terminal].iter().filter(|p| inside(p, x)).count();
            if hits != 1 {
                return Err(format!("{x} lies in {hits} of the three pieces"));
            }
        }
        Ok(true)
    }

    pub fn pos_cmp_total(rng: &mut ChaCha8Rng) -> Result<bool, String> {
        let m = Model::random(rng, true);
        let order = m.order();
        let ps: Vec<Position> = (0..3).map(|_| m.random_position(rng)).collect();
        let c = |a: &Position, b: &Position| order.pos_cmp(a, b).map_err(|e| e.to_string());
        for a in &ps {
            for b in &ps {
                let ab = c(a, b)?;
                if ab != key(a).cmp(&key(b)) || ab != c(b, a)?.reverse() {
                    return Err(format!("pos_cmp({a}, {b}) = {ab:?}"));
                }
                for z in &ps {
                    if ab != Ordering::Greater && c(b, z)? != Ordering::Greater && c(a, z)? == Ordering::Greater {
                        return Err(format!("not transitive on {a}, {b}, {z}"));
                    }
                }
            }
        }
        let iv = m.random_interval(rng);
        let count = order.interval_count(&iv).map_err(|e| e.to_string())?;
        if count != m.count(|x| inside(&iv, x)) {
            return Err(format!("count of {iv:?} in {order} = {count:?}"));
        }
        Ok(true)
    }
}

/// Runs `prop` until `want` instances meet its hypotheses.
pub fn run(seed: u64, want: usize, prop: fn(&mut ChaCha8Rng) -> Result<bool, String>) -> Result<usize, String> {
    let mut rng = super::rng(seed);
    let mut hits = 0;
    for _ in 0..want * 50 {
        if prop(&mut rng)? {
            hits += 1;
            if hits == want {
                return Ok(hits);
            }
        }
    }
    Err(format!("only {hits} of {want} instances met the hypotheses"))
}
