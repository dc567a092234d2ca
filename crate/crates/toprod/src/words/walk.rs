//! Ordered traversal of word expressions restricted by interval cuts.

use super::{FiniteWord, OmegaRule, QRule, Relabeling, Result, WordError, WordExpr};
use crate::groups::{GroupElement, Letter, Registry, Side};
use crate::orders::{cmp_gaps, cmp_pos_gap, locate, Count, Extremum, Gap, Interval, Loc, OrderError, Position, Sel};
use num_rational::Rational64;
use std::cmp::Ordering;
use std::sync::Arc;

const WALK_BUDGET: u64 = 50_000_000;
const TERM_SCAN_BUDGET: u64 = 100_000;

/// A conjunction of lower and upper cuts, all relative to the current node.
#[derive(Debug, Clone, Default)]
pub struct Cons {
    pub lo: Vec<Gap>,
    pub hi: Vec<Gap>,
}

impl Cons {
    pub fn all() -> Cons {
        Cons::default()
    }

    pub fn of(iv: &Interval) -> Cons {
        Cons { lo: vec![iv.lo.clone()], hi: vec![iv.hi.clone()] }
    }

    pub fn and(&self, iv: &Interval) -> Cons {
        let mut c = self.clone();
        c.lo.push(iv.lo.clone());
        c.hi.push(iv.hi.clone());
        c
    }

    fn excluded(&self) -> bool {
        self.lo.iter().any(|g| g.path.is_empty() && g.after) || self.hi.iter().any(|g| g.path.is_empty() && !g.after)
    }

    pub fn restrict(&self, sel: &Sel, rev: bool) -> Option<Cons> {
        let mut out = Cons::default();
        for g in &self.lo {
            match locate(g, sel, rev) {
                Loc::Below => {}
                Loc::Above => return None,
                Loc::Inside(t) => out.lo.push(t),
            }
        }
        for g in &self.hi {
            match locate(g, sel, rev) {
                Loc::Above => {}
                Loc::Below => return None,
                Loc::Inside(t) => out.hi.push(t),
            }
        }
        Some(out)
    }

    fn admits_leaf(&self) -> bool {
        self.lo.iter().all(|g| !g.after) && self.hi.iter().all(|g| g.after)
    }
}

#[derive(Debug, Clone)]
enum Xf {
    Shift(u32),
    Relabel(Arc<Relabeling>),
    Pair,
}

fn apply_xfs(xfs: &[Xf], mut l: Letter) -> Letter {
    for xf in xfs.iter().rev() {
        l = match xf {
            Xf::Shift(k) => Letter { group: l.group + k, value: l.value },
            Xf::Relabel(r) => Letter { group: r.apply(l.group), value: l.value },
            Xf::Pair => {
                let side = if l.group % 2 == 0 { Side::L } else { Side::R };
                Letter { group: l.group / 2, value: GroupElement::Free(vec![(side, l.value)]) }
            }
        };
    }
    l
}

#[derive(Clone)]
struct Ctx<'r> {
    reg: &'r Registry,
    rev: bool,
    xfs: Vec<Xf>,
    /// Largest local degree that can still be visible; `None` when unpruned.
    bound: Option<i64>,
}

pub(crate) trait Visitor {
    /// Whether traversal is pruned to a finite degree bound.
    fn bound(&self) -> Option<u64>;
    /// Returns `true` to stop.
    fn leaf(&mut self, path: &[Sel], letter: Letter) -> Result<bool>;
    /// An infinite family of children is about to be entered.
    fn infinite(&mut self) -> Result<bool> {
        Ok(false)
    }
    /// The next element in traversal order does not exist.
    fn no_next(&mut self) -> Result<bool> {
        Ok(true)
    }
}

struct Walker<'v, V: Visitor> {
    vis: &'v mut V,
    path: Vec<Sel>,
    backward: bool,
    steps: u64,
}

enum TermBound {
    Free,
    Exclude,
    Min(u64),
    Max(u64),
}

fn term_bound(g: &Gap, is_lo: bool, rev: bool) -> Result<TermBound> {
    match g.path.first() {
        None => Ok(TermBound::Free),
        Some(Sel::Part(_)) => Ok(if is_lo != rev { TermBound::Free } else { TermBound::Exclude }),
        Some(Sel::Omega(j)) => Ok(if is_lo != rev { TermBound::Min(*j) } else { TermBound::Max(*j) }),
        Some(s) => Err(OrderError::InvalidPosition { pos: s.to_string(), order: "omega word".into() }.into()),
    }
}

fn site_bound(g: &Gap) -> Result<Option<Rational64>> {
    match g.path.first() {
        None => Ok(None),
        Some(Sel::Rat(q)) => Ok(Some(*q)),
        Some(s) => Err(OrderError::InvalidPosition { pos: s.to_string(), order: "shuffle word".into() }.into()),
    }
}

impl<V: Visitor> Walker<'_, V> {
    fn tick(&mut self) -> Result<()> {
        self.steps += 1;
        if self.steps > WALK_BUDGET {
            return Err(WordError::Budget("word traversal".into()));
        }
        Ok(())
    }

    fn child(&mut self, sel: Sel, node: &WordExpr, cons: &Cons, ctx: &Ctx) -> Result<bool> {
        match cons.restrict(&sel, ctx.rev) {
            None => Ok(false),
            Some(c) => {
                self.path.push(sel);
                let r = self.walk(node, &c, ctx);
                self.path.pop();
                r
            }
        }
    }

    fn walk(&mut self, node: &WordExpr, cons: &Cons, ctx: &Ctx) -> Result<bool> {
        self.tick()?;
        if cons.excluded() || ctx.bound.is_some_and(|b| b < 0) {
            return Ok(false);
        }
        match node {
            WordExpr::Empty => Ok(false),
            WordExpr::Lit(l) => {
                if !cons.admits_leaf() || ctx.bound.is_some_and(|b| (l.group as i64) > b) {
                    return Ok(false);
                }
                let l = if ctx.rev { l.inverse(ctx.reg) } else { l.clone() };
                let l = apply_xfs(&ctx.xfs, l);
                self.vis.leaf(&self.path, l)
            }
            WordExpr::Cat(parts) => {
                let n = parts.len();
                for k in 0..n {
                    let i = if ctx.rev != self.backward { n - 1 - k } else { k };
                    if self.child(Sel::Part(i as u32), &parts[i], cons, ctx)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            WordExpr::Inv(x) => {
                let mut c = ctx.clone();
                c.rev = !c.rev;
                self.walk(x, cons, &c)
            }
            WordExpr::Shift(x, k) => {
                let mut c = ctx.clone();
                c.xfs.push(Xf::Shift(*k));
                c.bound = c.bound.map(|b| b - *k as i64);
                self.walk(x, cons, &c)
            }
            WordExpr::Relabel(x, r) => {
                let mut c = ctx.clone();
                c.xfs.push(Xf::Relabel(r.clone()));
                c.bound = c.bound.map(|b| b.max(r.max_key() as i64));
                self.walk(x, cons, &c)
            }
            WordExpr::Pair(x, inner) => {
                let c = Ctx {
                    reg: inner,
                    rev: ctx.rev,
                    xfs: {
                        let mut v = ctx.xfs.clone();
                        v.push(Xf::Pair);
                        v
                    },
                    bound: ctx.bound.map(|b| 2 * b + 1),
                };
                self.walk(x, cons, &c)
            }
            WordExpr::Sub(x, iv) => {
                let local = if ctx.rev { iv.reversed() } else { iv.clone() };
                self.walk(x, &cons.and(&local), ctx)
            }
            WordExpr::Ref(_, x) => self.walk(x, cons, ctx),
            WordExpr::Omega(rule) => self.walk_omega(rule, cons, ctx),
            WordExpr::QShuffle(rule) => self.walk_shuffle(rule, cons, ctx),
        }
    }

    fn walk_omega(&mut self, rule: &OmegaRule, cons: &Cons, ctx: &Ctx) -> Result<bool> {
        let mut lo: u64 = 0;
        let mut hi: Option<u64> = None;
        let mut none = false;
        for (g, is_lo) in cons.lo.iter().map(|g| (g, true)).chain(cons.hi.iter().map(|g| (g, false))) {
            match term_bound(g, is_lo, ctx.rev)? {
                TermBound::Free => {}
                TermBound::Exclude => none = true,
                TermBound::Min(j) => lo = lo.max(j),
                TermBound::Max(j) => hi = Some(hi.map_or(j, |h| h.min(j))),
            }
        }
        if let Some(b) = ctx.bound {
            let esc = rule.escape(b as u64);
            if esc == 0 {
                none = true;
            } else {
                hi = Some(hi.map_or(esc - 1, |h| h.min(esc - 1)));
            }
        }
        if hi.is_some_and(|h| h < lo) {
            none = true;
        }
        let forward = ctx.rev == self.backward;
        let prefix = |w: &mut Self| -> Result<bool> {
            let n = rule.prefix.len();
            for k in 0..n {
                let i = if forward { k } else { n - 1 - k };
                if w.child(Sel::Part(i as u32), &rule.prefix[i], cons, ctx)? {
                    return Ok(true);
                }
            }
            Ok(false)
        };
        let pruned = self.vis.bound().is_some();
        let terms = |w: &mut Self| -> Result<bool> {
            if none {
                return Ok(false);
            }
            if hi.is_none() && !pruned && w.vis.infinite()? {
                return Ok(true);
            }
            match (forward, hi) {
                (true, _) => {
                    let mut m = lo;
                    let mut scanned = 0;
                    loop {
                        if hi.is_some_and(|h| m > h) {
                            return Ok(false);
                        }
                        scanned += 1;
                        if hi.is_none() && scanned > TERM_SCAN_BUDGET {
                            return Err(WordError::Budget("omega term scan".into()));
                        }
                        let t = rule.tail.term(ctx.reg, m)?;
                        if w.child(Sel::Omega(m), &t, cons, ctx)? {
                            return Ok(true);
                        }
                        m += 1;
                    }
                }
                (false, Some(h)) => {
                    for m in (lo..=h).rev() {
                        let t = rule.tail.term(ctx.reg, m)?;
                        if w.child(Sel::Omega(m), &t, cons, ctx)? {
                            return Ok(true);
                        }
                    }
                    Ok(false)
                }
                (false, None) => w.vis.no_next(),
            }
        };
        if forward {
            Ok(prefix(self)? || terms(self)?)
        } else {
            Ok(terms(self)? || prefix(self)?)
        }
    }

    fn walk_shuffle(&mut self, rule: &QRule, cons: &Cons, ctx: &Ctx) -> Result<bool> {
        let mut a: Option<Rational64> = None;
        let mut b: Option<Rational64> = None;
        for g in &cons.lo {
            if let Some(r) = site_bound(g)? {
                if ctx.rev {
                    b = Some(b.map_or(r, |x| x.min(r)));
                } else {
                    a = Some(a.map_or(r, |x| x.max(r)));
                }
            }
        }
        for g in &cons.hi {
            if let Some(r) = site_bound(g)? {
                if ctx.rev {
                    a = Some(a.map_or(r, |x| x.max(r)));
                } else {
                    b = Some(b.map_or(r, |x| x.min(r)));
                }
            }
        }
        if let (Some(x), Some(y)) = (a, b) {
            if x > y {
                return Ok(false);
            }
        }
        let ascending = ctx.rev == self.backward;
        let visit = |w: &mut Self, s: Rational64, m: u64, sign: i8| -> Result<bool> {
            let block = rule.block(ctx.reg, m, sign)?;
            w.child(Sel::Rat(s), &block, cons, ctx)
        };
        if let Some(bound) = ctx.bound {
            let mut sites = Vec::new();
            for m in 0..=rule.levels_upto(bound as u64) {
                if rule.lower_bound(m) as i64 > bound {
                    continue;
                }
                for (s, sign) in rule.level_sites(m, a, b) {
                    sites.push((s, m, sign));
                }
            }
            sites.sort_by(|x, y| if ascending { x.0.cmp(&y.0) } else { y.0.cmp(&x.0) });
            for (s, m, sign) in sites {
                if visit(self, s, m, sign)? {
                    return Ok(true);
                }
            }
            return Ok(false);
        }
        // Unpruned: boundary sites, finitely many table sites, then possibly
        // a dense run without extremum.
        let dense = rule.fiber_tail.as_ref().and_then(|t| {
            let dl = a.map_or(t.lo, |x| x.max(t.lo));
            let dh = b.map_or(t.hi, |x| x.min(t.hi));
            (dl < dh).then_some((dl, dh))
        });
        if dense.is_some() && self.vis.infinite()? {
            return Ok(true);
        }
        let mut table: Vec<(Rational64, u64, i8)> = rule
            .fibers
            .iter()
            .flat_map(|(m, v)| v.iter().map(move |(s, sign)| (*s, *m, *sign)))
            .filter(|(s, _, _)| a.is_none_or(|x| *s > x) && b.is_none_or(|y| *s < y))
            .collect();
        table.sort_by(|x, y| if ascending { x.0.cmp(&y.0) } else { y.0.cmp(&x.0) });
        let (first_end, last_end) = if ascending { (a, b) } else { (b, a) };
        if let Some(s) = first_end {
            if let Some((m, sign)) = rule.site(&s) {
                if visit(self, s, m, sign)? {
                    return Ok(true);
                }
            }
        }
        for (s, m, sign) in table {
            if let Some((dl, dh)) = dense {
                let reached = if ascending { s > dl } else { s < dh };
                if reached {
                    return self.vis.no_next();
                }
            }
            if visit(self, s, m, sign)? {
                return Ok(true);
            }
        }
        if dense.is_some() {
            return self.vis.no_next();
        }
        if let Some(s) = last_end {
            if Some(s) != first_end {
                if let Some((m, sign)) = rule.site(&s) {
                    if visit(self, s, m, sign)? {
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }
}

fn run<V: Visitor>(reg: &Registry, w: &WordExpr, cons: &Cons, vis: &mut V, backward: bool) -> Result<()> {
    let bound = vis.bound().map(|b| b as i64);
    let ctx = Ctx { reg, rev: false, xfs: Vec::new(), bound };
    let mut walker = Walker { vis, path: Vec::new(), backward, steps: 0 };
    walker.walk(w, cons, &ctx)?;
    Ok(())
}

struct Collect {
    depth: u64,
    out: Vec<(Position, Letter)>,
}

impl Visitor for Collect {
    fn bound(&self) -> Option<u64> {
        Some(self.depth)
    }
    fn leaf(&mut self, path: &[Sel], letter: Letter) -> Result<bool> {
        if letter.group as u64 <= self.depth {
            self.out.push((Position(path.to_vec()), letter));
        }
        Ok(false)
    }
}

struct First {
    found: Option<Extremum>,
}

impl Visitor for First {
    fn bound(&self) -> Option<u64> {
        None
    }
    fn leaf(&mut self, path: &[Sel], letter: Letter) -> Result<bool> {
        let _ = letter;
        self.found = Some(Extremum::At(Position(path.to_vec())));
        Ok(true)
    }
    fn no_next(&mut self) -> Result<bool> {
        self.found = Some(Extremum::Unbounded);
        Ok(true)
    }
}

struct Counter {
    n: u64,
    infinite: bool,
    cap: u64,
}

impl Visitor for Counter {
    fn bound(&self) -> Option<u64> {
        None
    }
    fn leaf(&mut self, _: &[Sel], _: Letter) -> Result<bool> {
        self.n += 1;
        Ok(self.n >= self.cap)
    }
    fn infinite(&mut self) -> Result<bool> {
        self.infinite = true;
        Ok(true)
    }
    fn no_next(&mut self) -> Result<bool> {
        self.infinite = true;
        Ok(true)
    }
}

/// `p_N` restricted to an interval: the letters of degree at most `n`, in order.
pub fn project_in(reg: &Registry, w: &WordExpr, iv: &Interval, n: u64) -> Result<FiniteWord> {
    let mut v = Collect { depth: n, out: Vec::new() };
    run(reg, w, &Cons::of(iv), &mut v, false)?;
    Ok(FiniteWord(v.out))
}

/// `p_N(W)`.
pub fn project(reg: &Registry, w: &WordExpr, n: u64) -> Result<FiniteWord> {
    project_in(reg, w, &Interval::full(), n)
}

/// Least (or greatest) letter position of `W` inside `iv`.
pub fn extremum(reg: &Registry, w: &WordExpr, iv: &Interval, least: bool) -> Result<Extremum> {
    let mut v = First { found: None };
    run(reg, w, &Cons::of(iv), &mut v, !least)?;
    Ok(v.found.unwrap_or(Extremum::Empty))
}

pub fn first(reg: &Registry, w: &WordExpr, iv: &Interval) -> Result<Extremum> {
    extremum(reg, w, iv, true)
}

pub fn last(reg: &Registry, w: &WordExpr, iv: &Interval) -> Result<Extremum> {
    extremum(reg, w, iv, false)
}

/// Number of letters of `W` strictly between the cuts of `cons`.
pub fn count_cons(reg: &Registry, w: &WordExpr, cons: &Cons, cap: u64) -> Result<Count> {
    let mut v = Counter { n: 0, infinite: false, cap };
    run(reg, w, cons, &mut v, false)?;
    Ok(if v.infinite || v.n >= cap { Count::Infinite } else { Count::Finite(v.n) })
}

/// Letters beyond this many are reported as `Count::Infinite`.
pub const COUNT_CAP: u64 = 1 << 22;

pub fn count_in(reg: &Registry, w: &WordExpr, iv: &Interval) -> Result<Count> {
    count_cons(reg, w, &Cons::of(iv), COUNT_CAP)
}

pub fn is_empty_in(reg: &Registry, w: &WordExpr, iv: &Interval) -> Result<bool> {
    Ok(matches!(first(reg, w, iv)?, Extremum::Empty))
}

pub fn is_finite_word(reg: &Registry, w: &WordExpr) -> Result<bool> {
    Ok(count_in(reg, w, &Interval::full())?.is_finite())
}

/// All letters of a finite word, in order.
pub fn letters_of(reg: &Registry, w: &WordExpr, iv: &Interval) -> Result<FiniteWord> {
    let mut out = Vec::new();
    let mut cur = iv.clone();
    loop {
        match first(reg, w, &cur)? {
            Extremum::Empty => return Ok(FiniteWord(out)),
            Extremum::Unbounded => return Err(WordError::Infinite("interval has no least letter".into())),
            Extremum::At(p) => {
                let l = letter_at(reg, w, &p)?.ok_or_else(|| WordError::NoSuchLetter(p.to_string()))?;
                cur.lo = Gap::after(&p);
                out.push((p, l));
                if out.len() as u64 > COUNT_CAP {
                    return Err(WordError::Infinite("too many letters".into()));
                }
            }
        }
    }
}

/// Every letter of a finite word.
pub fn to_finite(reg: &Registry, w: &WordExpr) -> Result<FiniteWord> {
    if !is_finite_word(reg, w)? {
        return Err(WordError::Infinite("expected a finite word".into()));
    }
    letters_of(reg, w, &Interval::full())
}

struct Probe {
    found: Option<Letter>,
    target: Vec<Sel>,
}

impl Visitor for Probe {
    fn bound(&self) -> Option<u64> {
        None
    }
    fn leaf(&mut self, path: &[Sel], letter: Letter) -> Result<bool> {
        if path == self.target.as_slice() {
            self.found = Some(letter);
        }
        Ok(true)
    }
}

/// The letter at `p`, if `p` addresses a letter of `W`.
pub fn letter_at(reg: &Registry, w: &WordExpr, p: &Position) -> Result<Option<Letter>> {
    let mut v = Probe { found: None, target: p.0.clone() };
    run(reg, w, &Cons::of(&Interval::point(p)), &mut v, false)?;
    Ok(v.found)
}

/// For each prefix length `i` of `path`, whether the node reached lists its
/// children in reverse.
pub fn rev_profile(reg: &Registry, w: &WordExpr, path: &[Sel]) -> Result<Vec<bool>> {
    let mut out = Vec::with_capacity(path.len() + 1);
    let mut node = w.clone();
    let mut rev = false;
    let mut reg_cur = reg.clone();
    let mut i = 0;
    loop {
        match &node {
            WordExpr::Inv(x) => {
                rev = !rev;
                node = (**x).clone();
                continue;
            }
            WordExpr::Shift(x, _) | WordExpr::Relabel(x, _) | WordExpr::Sub(x, _) | WordExpr::Ref(_, x) => {
                node = (**x).clone();
                continue;
            }
            WordExpr::Pair(x, inner) => {
                reg_cur = (**inner).clone();
                node = (**x).clone();
                continue;
            }
            _ => {}
        }
        out.push(rev);
        if i == path.len() {
            return Ok(out);
        }
        let next = match (&node, &path[i]) {
            (WordExpr::Cat(parts), Sel::Part(k)) => parts.get(*k as usize).cloned(),
            (WordExpr::Omega(rule), Sel::Part(k)) => rule.prefix.get(*k as usize).cloned(),
            (WordExpr::Omega(rule), Sel::Omega(m)) => Some(rule.tail.term(&reg_cur, *m)?),
            (WordExpr::QShuffle(rule), Sel::Rat(s)) => match rule.site(s) {
                Some((m, sign)) => Some(rule.block(&reg_cur, m, sign)?),
                None => None,
            },
            _ => None,
        };
        match next {
            Some(n) => node = n,
            None => {
                // Off the structure (a cut between sites, say): deeper levels
                // never decide a comparison.
                while out.len() <= path.len() {
                    out.push(rev);
                }
                return Ok(out);
            }
        }
        i += 1;
    }
}

fn common_prefix(a: &[Sel], b: &[Sel]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

pub fn cmp_gaps_in(reg: &Registry, w: &WordExpr, a: &Gap, b: &Gap) -> Result<Ordering> {
    let k = common_prefix(&a.path, &b.path);
    let prof = rev_profile(reg, w, &a.path[..k])?;
    Ok(cmp_gaps(a, b, |i| prof.get(i).copied().unwrap_or(false)))
}

pub fn cmp_pos_gap_in(reg: &Registry, w: &WordExpr, p: &Position, g: &Gap) -> Result<Ordering> {
    let k = common_prefix(&p.0, &g.path);
    let prof = rev_profile(reg, w, &p.0[..k])?;
    Ok(cmp_pos_gap(&p.0, g, |i| prof.get(i).copied().unwrap_or(false)))
}

pub fn cmp_pos_in(reg: &Registry, w: &WordExpr, a: &Position, b: &Position) -> Result<Ordering> {
    cmp_gaps_in(reg, w, &Gap::before(a), &Gap::before(b))
}

pub fn intersect(reg: &Registry, w: &WordExpr, x: &Interval, y: &Interval) -> Result<Interval> {
    let lo = if cmp_gaps_in(reg, w, &x.lo, &y.lo)? == Ordering::Less { y.lo.clone() } else { x.lo.clone() };
    let hi = if cmp_gaps_in(reg, w, &x.hi, &y.hi)? == Ordering::Greater { y.hi.clone() } else { x.hi.clone() };
    Ok(Interval { lo, hi })
}

/// Letters of `x` outside `y`, as two pieces (below and above `y`).
pub fn difference_counts(reg: &Registry, w: &WordExpr, x: &Interval, y: &Interval) -> Result<(Count, Count)> {
    let below = Cons { lo: vec![x.lo.clone()], hi: vec![x.hi.clone(), y.lo.clone()] };
    let above = Cons { lo: vec![x.lo.clone(), y.hi.clone()], hi: vec![x.hi.clone()] };
    Ok((count_cons(reg, w, &below, COUNT_CAP)?, count_cons(reg, w, &above, COUNT_CAP)?))
}

/// Whether two intervals hold the same letters.
pub fn same_letters(reg: &Registry, w: &WordExpr, x: &Interval, y: &Interval) -> Result<bool> {
    let (a, b) = difference_counts(reg, w, x, y)?;
    let (c, d) = difference_counts(reg, w, y, x)?;
    Ok([a, b, c, d].iter().all(|n| n.is_zero()))
}

/// Whether two intervals differ in finitely many letters.
pub fn finitely_different(reg: &Registry, w: &WordExpr, x: &Interval, y: &Interval) -> Result<bool> {
    let (a, b) = difference_counts(reg, w, x, y)?;
    let (c, d) = difference_counts(reg, w, y, x)?;
    Ok([a, b, c, d].iter().all(|n| n.is_finite()))
}

/// Least degree of a letter in `iv`, probing projections up to `limit`.
pub fn min_degree_in(reg: &Registry, w: &WordExpr, iv: &Interval, limit: u64) -> Result<Option<u64>> {
    if is_empty_in(reg, w, iv)? {
        return Ok(None);
    }
    for n in 0..=limit {
        let p = project_in(reg, w, iv, n)?;
        if let Some((_, l)) = p.0.iter().min_by_key(|(_, l)| l.group) {
            return Ok(Some(l.group as u64));
        }
    }
    Err(WordError::Budget(format!("no letter of degree at most {limit}")))
}

/// Default probe limit for least-degree queries.
pub const DEGREE_PROBE: u64 = 96;

/// `d(W)`: the least degree of a letter of `W`; `None` for the empty word.
pub fn d_word(reg: &Registry, w: &WordExpr) -> Result<Option<u64>> {
    min_degree_in(reg, w, &Interval::full(), DEGREE_PROBE)
}

/// The subword at the block `path`, as a word whose positions are the
/// block's positions with `path` removed and whose order is the order the
/// block has inside `w`.
pub fn block_at(reg: &Registry, w: &WordExpr, path: &[Sel]) -> Result<Option<WordExpr>> {
    let Some(sel) = path.first() else {
        return Ok(Some(w.clone()));
    };
    let rest = &path[1..];
    Ok(match w {
        WordExpr::Inv(x) => block_at(reg, x, path)?.map(WordExpr::inv),
        WordExpr::Shift(x, k) => block_at(reg, x, path)?.map(|b| WordExpr::Shift(Arc::new(b), *k)),
        WordExpr::Relabel(x, r) => block_at(reg, x, path)?.map(|b| WordExpr::Relabel(Arc::new(b), r.clone())),
        WordExpr::Pair(x, inner) => block_at(inner, x, path)?.map(|b| WordExpr::Pair(Arc::new(b), inner.clone())),
        WordExpr::Ref(_, x) => block_at(reg, x, path)?,
        WordExpr::Sub(x, iv) => match block_at(reg, x, path)? {
            None => None,
            Some(b) => {
                let lo = clip_gap(reg, x, &iv.lo, path, true)?;
                let hi = clip_gap(reg, x, &iv.hi, path, false)?;
                match (lo, hi) {
                    (Some(lo), Some(hi)) => Some(WordExpr::sub(b, Interval { lo, hi })),
                    _ => Some(WordExpr::Empty),
                }
            }
        },
        WordExpr::Cat(parts) => match sel {
            Sel::Part(k) => match parts.get(*k as usize) {
                Some(p) => block_at(reg, p, rest)?,
                None => None,
            },
            _ => None,
        },
        WordExpr::Omega(rule) => match sel {
            Sel::Part(k) => match rule.prefix.get(*k as usize) {
                Some(p) => block_at(reg, p, rest)?,
                None => None,
            },
            Sel::Omega(m) => block_at(reg, &rule.tail.term(reg, *m)?, rest)?,
            _ => None,
        },
        WordExpr::QShuffle(rule) => match sel {
            Sel::Rat(s) => match rule.site(s) {
                Some((m, sign)) => block_at(reg, &rule.block(reg, m, sign)?, rest)?,
                None => None,
            },
            _ => None,
        },
        WordExpr::Empty | WordExpr::Lit(_) => None,
    })
}

/// Reads the cut `g` of `w` inside the block at `path`; `None` when the
/// block lies entirely on the wrong side of it.
fn clip_gap(reg: &Registry, w: &WordExpr, g: &Gap, path: &[Sel], lower: bool) -> Result<Option<Gap>> {
    let blk = Position(path.to_vec());
    if g.path.len() > path.len() && g.path.starts_with(path) {
        return Ok(Some(Gap { path: g.path[path.len()..].to_vec(), after: g.after }));
    }
    let below = cmp_gaps_in(reg, w, g, &Gap::before(&blk))? != Ordering::Greater;
    let above = cmp_gaps_in(reg, w, g, &Gap::after(&blk))? != Ordering::Less;
    Ok(match (lower, below, above) {
        (true, true, _) => Some(Gap::start()),
        (false, _, true) => Some(Gap::end()),
        _ => None,
    })
}
