//! Bounded searches over depth-`N` skeletons: subword occurrences, degree
//! profile embeddings and membership in the subgroup generated by the
//! subwords of a family.

use super::{
    count_cons, extremum, is_finite_word, project, to_finite, Cons, FiniteWord, Result, WordError, WordExpr, COUNT_CAP,
};
use crate::groups::{g_inv, g_is_identity, g_mul, GroupElement, GroupSpec, Letter, Registry};
use crate::orders::{Count, Extremum, Gap, Interval, Position, Sel};
use num_integer::Integer;
use std::collections::{HashSet, VecDeque};

/// The letters of degree at most `depth` inside an interval, with the size
/// class of each run of invisible letters around them.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub depth: u64,
    pub letters: Vec<(Position, Letter)>,
    /// `regions[i]` counts the letters between visible letters `i-1` and `i`.
    pub regions: Vec<Count>,
}

impl Skeleton {
    pub fn build(reg: &Registry, w: &WordExpr, iv: &Interval, depth: u64) -> Result<Skeleton> {
        let letters = super::project_in(reg, w, iv, depth)?.0;
        let mut regions = Vec::with_capacity(letters.len() + 1);
        for i in 0..=letters.len() {
            let mut cons = Cons::of(iv);
            if i > 0 {
                cons.lo.push(Gap::after(&letters[i - 1].0));
            }
            if i < letters.len() {
                cons.hi.push(Gap::before(&letters[i].0));
            }
            regions.push(count_cons(reg, w, &cons, COUNT_CAP)?);
        }
        Ok(Skeleton { depth, letters, regions })
    }

    /// The skeleton of the inverse word: reversed, letters inverted.
    pub fn inverse(&self, reg: &Registry) -> Skeleton {
        Skeleton {
            depth: self.depth,
            letters: self.letters.iter().rev().map(|(p, l)| (p.clone(), l.inverse(reg))).collect(),
            regions: self.regions.iter().rev().copied().collect(),
        }
    }

    fn same_run(&self, a: usize, other: &Skeleton, b: usize, len: usize) -> bool {
        (0..len).all(|k| self.letters[a + k].1 == other.letters[b + k].1)
            && (1..len).all(|k| self.regions[a + k] == other.regions[b + k])
    }
}

fn count_le(a: Count, b: Count) -> bool {
    match (a, b) {
        (_, Count::Infinite) => true,
        (Count::Infinite, Count::Finite(_)) => false,
        (Count::Finite(x), Count::Finite(y)) => x <= y,
    }
}

/// Steps `k` letters from the gap `g` (downwards when `down`), returning the
/// position reached.
fn step_letters(reg: &Registry, w: &WordExpr, bound: &Gap, g: &Gap, k: u64, down: bool) -> Result<Option<Position>> {
    let mut cur = g.clone();
    let mut last = None;
    for _ in 0..k {
        let iv = if down { Interval { lo: bound.clone(), hi: cur.clone() } } else { Interval { lo: cur.clone(), hi: bound.clone() } };
        match extremum(reg, w, &iv, !down)? {
            Extremum::At(p) => {
                cur = if down { Gap::before(&p) } else { Gap::after(&p) };
                last = Some(p);
            }
            _ => return Ok(None),
        }
    }
    Ok(last)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubwordVerdict {
    Found(Interval),
    NotFoundToDepth(u64),
}

/// Every interval of `host` carrying a copy of `pattern`. Exact when both
/// words are finite; otherwise the copies agree with `pattern` on letters of
/// degree at most `depth` and on the size of every invisible run.
pub fn find_occurrences(reg: &Registry, pattern: &WordExpr, host: &WordExpr, depth: u64) -> Result<Vec<Interval>> {
    if pattern == host {
        return Ok(vec![Interval::full()]);
    }
    if is_finite_word(reg, pattern)? && is_finite_word(reg, host)? {
        let p = to_finite(reg, pattern)?;
        let h = to_finite(reg, host)?;
        if p.is_empty() {
            return Ok(vec![Interval::empty()]);
        }
        let pl = p.letters();
        let mut out = Vec::new();
        for s in 0..h.len().saturating_sub(pl.len() - 1) {
            if h.0[s..s + pl.len()].iter().map(|(_, l)| l).eq(pl.iter()) {
                out.push(Interval::closed(&h.0[s].0, &h.0[s + pl.len() - 1].0));
            }
        }
        return Ok(out);
    }
    let ps = Skeleton::build(reg, pattern, &Interval::full(), depth)?;
    let hs = Skeleton::build(reg, host, &Interval::full(), depth)?;
    let k = ps.letters.len();
    if k == 0 || hs.letters.len() < k {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for s in 0..=hs.letters.len() - k {
        if !hs.same_run(s, &ps, 0, k) || !count_le(ps.regions[0], hs.regions[s]) || !count_le(ps.regions[k], hs.regions[s + k]) {
            continue;
        }
        let region_lo = if s == 0 { Gap::start() } else { Gap::after(&hs.letters[s - 1].0) };
        let region_hi = if s + k == hs.letters.len() { Gap::end() } else { Gap::before(&hs.letters[s + k].0) };
        let first = Gap::before(&hs.letters[s].0);
        let last = Gap::after(&hs.letters[s + k - 1].0);
        let lo = match ps.regions[0] {
            Count::Infinite => Some(region_lo),
            Count::Finite(0) => Some(first),
            Count::Finite(j) => step_letters(reg, host, &region_lo, &first, j, true)?.map(|p| Gap::before(&p)),
        };
        let hi = match ps.regions[k] {
            Count::Infinite => Some(region_hi),
            Count::Finite(0) => Some(last),
            Count::Finite(j) => step_letters(reg, host, &region_hi, &last, j, false)?.map(|p| Gap::after(&p)),
        };
        if let (Some(lo), Some(hi)) = (lo, hi) {
            out.push(Interval { lo, hi });
        }
    }
    Ok(out)
}

pub fn occurs_as_subword(reg: &Registry, pattern: &WordExpr, host: &WordExpr, depth: u64) -> Result<SubwordVerdict> {
    Ok(match find_occurrences(reg, pattern, host, depth)?.into_iter().next() {
        Some(iv) => SubwordVerdict::Found(iv),
        None => SubwordVerdict::NotFoundToDepth(depth),
    })
}

/// Every window of `target` whose degrees read `profile`, as lists of target
/// indices. The window is fixed by where one anchor element lands, so only
/// sites carrying the anchor's degree are tried.
pub fn enumerate_degree_embeddings(profile: &[u64], target: &FiniteWord) -> Vec<Vec<usize>> {
    let degrees: Vec<u64> = target.0.iter().map(|(_, l)| l.group as u64).collect();
    degree_windows(profile, &degrees)
}

pub fn degree_windows(profile: &[u64], degrees: &[u64]) -> Vec<Vec<usize>> {
    if profile.is_empty() || profile.len() > degrees.len() {
        return Vec::new();
    }
    // Anchor on the rarest degree of the profile.
    let freq = |d: u64| degrees.iter().filter(|&&x| x == d).count();
    let anchor = (0..profile.len()).min_by_key(|&i| freq(profile[i])).unwrap_or(0);
    let mut out = Vec::new();
    for (site, &d) in degrees.iter().enumerate() {
        if d != profile[anchor] || site < anchor || site - anchor + profile.len() > degrees.len() {
            continue;
        }
        let start = site - anchor;
        if (0..profile.len()).all(|k| degrees[start + k] == profile[k]) {
            out.push((start..start + profile.len()).collect());
        }
    }
    out
}

/// Whether `x` lies in the subgroup generated by `gens`.
pub fn generated_by(spec: &GroupSpec, gens: &[GroupElement], x: &GroupElement) -> Result<bool> {
    match (spec, x) {
        (GroupSpec::InfiniteCyclic, GroupElement::Int(v)) => {
            let g = gens.iter().filter_map(|e| if let GroupElement::Int(a) = e { Some(*a) } else { None }).fold(0i64, |g, a| g.gcd(&a));
            Ok(if g == 0 { *v == 0 } else { v % g == 0 })
        }
        (GroupSpec::FiniteCyclic(k), GroupElement::Int(v)) => {
            let k = *k as i64;
            let g = gens.iter().filter_map(|e| if let GroupElement::Int(a) = e { Some(*a) } else { None }).fold(k, |g, a| g.gcd(&a));
            Ok(v.rem_euclid(k) % g == 0)
        }
        _ => {
            // Breadth-first over short products of generators.
            const LIMIT: usize = 20_000;
            let mut steps = Vec::new();
            for g in gens {
                steps.push(g.clone());
                steps.push(g_inv(spec, g)?);
            }
            let start = crate::groups::g_identity(spec);
            let mut seen: HashSet<String> = HashSet::new();
            seen.insert(format!("{start:?}"));
            let mut queue = VecDeque::from([(start, 0u32)]);
            while let Some((e, len)) = queue.pop_front() {
                if &e == x {
                    return Ok(true);
                }
                if len >= 6 || seen.len() > LIMIT {
                    continue;
                }
                for s in &steps {
                    let n = g_mul(spec, &e, s)?;
                    if seen.insert(format!("{n:?}")) {
                        queue.push_back((n, len + 1));
                    }
                }
            }
            Ok(g_is_identity(spec, x))
        }
    }
}

/// One factor of a decomposition of a word over a family.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    /// `(family[index] restricted to interval)^sign`, occupying `span` of the word.
    Sub { index: usize, interval: Interval, sign: i8, span: Interval },
    /// A single letter lying in the subgroup generated by the family's letters of its group.
    Letter { letter: Letter, span: Interval },
}

impl Factor {
    pub fn span(&self) -> &Interval {
        match self {
            Factor::Sub { span, .. } | Factor::Letter { span, .. } => span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub factors: Vec<Factor>,
    /// `None` when every factor is an exact copy; otherwise the depth the
    /// factors were matched to.
    pub depth: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FineVerdict {
    MemberWitness(Decomposition),
    NoDecompositionToDepth(u64),
}

/// Upper bound on the number of factors tried by the bounded search.
pub const FACTOR_CAP: usize = 12;

fn family_letters(reg: &Registry, family: &[WordExpr], n: u32) -> Result<Vec<GroupElement>> {
    let mut out = Vec::new();
    for v in family {
        for (_, l) in project(reg, v, n as u64)?.0 {
            if l.group == n {
                out.push(l.value);
            }
        }
    }
    Ok(out)
}

fn letter_generated(reg: &Registry, family: &[WordExpr], l: &Letter) -> Result<bool> {
    let gens = family_letters(reg, family, l.group)?;
    generated_by(reg.spec(l.group), &gens, &l.value)
}

/// Reads a decomposition off the shape of `w` when it is literally a
/// concatenation of family words, their subwords, inverses and letters.
pub fn structural_witness(reg: &Registry, w: &WordExpr, family: &[WordExpr]) -> Result<Option<Decomposition>> {
    let mut leaves = Vec::new();
    if !flatten(reg, w, &mut Vec::new(), false, family, &mut leaves) {
        return Ok(None);
    }
    let mut factors = Vec::new();
    for leaf in leaves {
        match leaf {
            Leaf::Family { index, interval, sign, path } => {
                factors.push(Factor::Sub { index, interval, sign, span: Interval::point(&Position(path)) })
            }
            Leaf::Lit(l, path) => {
                let span = Interval::point(&Position(path));
                let mut hit = None;
                for (i, v) in family.iter().enumerate() {
                    if let Some((p, _)) = project(reg, v, l.group as u64)?.0.into_iter().find(|(_, x)| *x == l) {
                        hit = Some(Factor::Sub { index: i, interval: Interval::point(&p), sign: 1, span: span.clone() });
                        break;
                    }
                }
                match hit {
                    Some(f) => factors.push(f),
                    None if letter_generated(reg, family, &l)? => factors.push(Factor::Letter { letter: l, span }),
                    None => return Ok(None),
                }
            }
        }
    }
    Ok(Some(Decomposition { factors, depth: None }))
}

enum Leaf {
    Family { index: usize, interval: Interval, sign: i8, path: Vec<Sel> },
    Lit(Letter, Vec<Sel>),
}

fn family_index(x: &WordExpr, family: &[WordExpr]) -> Option<usize> {
    family.iter().position(|v| v == x)
}

fn flatten(reg: &Registry, w: &WordExpr, path: &mut Vec<Sel>, rev: bool, family: &[WordExpr], out: &mut Vec<Leaf>) -> bool {
    let sign = if rev { -1 } else { 1 };
    if let Some(index) = family_index(w, family) {
        out.push(Leaf::Family { index, interval: Interval::full(), sign, path: path.clone() });
        return true;
    }
    match w {
        WordExpr::Empty => true,
        WordExpr::Lit(l) => {
            out.push(Leaf::Lit(if rev { l.inverse(reg) } else { l.clone() }, path.clone()));
            true
        }
        WordExpr::Sub(x, iv) => match family_index(x, family) {
            Some(index) => {
                out.push(Leaf::Family { index, interval: iv.clone(), sign, path: path.clone() });
                true
            }
            None => false,
        },
        WordExpr::Inv(x) => flatten(reg, x, path, !rev, family, out),
        WordExpr::Ref(_, x) => flatten(reg, x, path, rev, family, out),
        WordExpr::Cat(parts) => {
            let n = parts.len();
            for k in 0..n {
                let i = if rev { n - 1 - k } else { k };
                path.push(Sel::Part(i as u32));
                let ok = flatten(reg, &parts[i], path, rev, family, out);
                path.pop();
                if !ok {
                    return false;
                }
            }
            true
        }
        _ => false,
    }
}

struct Cand {
    end: usize,
    lead: Count,
    trail: Count,
    factor: CandFactor,
}

#[derive(Clone)]
enum CandFactor {
    Run { index: usize, sign: i8, start: usize },
    Letter,
}

/// Searches for `W = W_0 ... W_k` with every factor a family subword, the
/// inverse of one, or a single letter generated by the family's letters of
/// its group. Factors are matched on their depth-`n` skeletons and each must
/// contain a letter of degree at most `n`.
pub fn fine_membership_bounded(reg: &Registry, w: &WordExpr, family: &[WordExpr], n: u64) -> Result<FineVerdict> {
    fine_membership_capped(reg, w, family, n, FACTOR_CAP)
}

pub fn fine_membership_capped(reg: &Registry, w: &WordExpr, family: &[WordExpr], n: u64, cap: usize) -> Result<FineVerdict> {
    if let Some(d) = structural_witness(reg, w, family)? {
        if d.factors.len() <= cap {
            return Ok(FineVerdict::MemberWitness(d));
        }
    }
    if matches!(super::first(reg, w, &Interval::full())?, Extremum::Empty) {
        return Ok(FineVerdict::MemberWitness(Decomposition { factors: Vec::new(), depth: None }));
    }
    let ws = Skeleton::build(reg, w, &Interval::full(), n)?;
    let len = ws.letters.len();
    if len == 0 {
        return Ok(FineVerdict::NoDecompositionToDepth(n));
    }
    let mut views = Vec::new();
    for (index, v) in family.iter().enumerate() {
        let sk = Skeleton::build(reg, v, &Interval::full(), n)?;
        views.push((index, 1i8, sk.clone(), sk.letters.len()));
        views.push((index, -1i8, sk.inverse(reg), sk.letters.len()));
    }
    let mut cands: Vec<Vec<Cand>> = (0..len).map(|_| Vec::new()).collect();
    for (i, slot) in cands.iter_mut().enumerate() {
        for (index, sign, sk, m) in &views {
            for s in 0..*m {
                let mut k = 0;
                while i + k < len && s + k < *m && ws.letters[i + k].1 == sk.letters[s + k].1 && (k == 0 || ws.regions[i + k] == sk.regions[s + k]) {
                    k += 1;
                    slot.push(Cand {
                        end: i + k,
                        lead: sk.regions[s],
                        trail: sk.regions[s + k],
                        factor: CandFactor::Run { index: *index, sign: *sign, start: s },
                    });
                }
            }
        }
        if letter_generated(reg, family, &ws.letters[i].1)? {
            slot.push(Cand { end: i + 1, lead: Count::Finite(0), trail: Count::Finite(0), factor: CandFactor::Letter });
        }
    }
    // best[i][t]: largest trailing room of a decomposition of the first `i`
    // visible letters into `t` factors, with a back pointer.
    type Back = (usize, usize, usize);
    let mut best: Vec<Vec<Option<(Count, Option<Back>)>>> = vec![vec![None; cap + 1]; len + 1];
    for (c, cand) in cands[0].iter().enumerate() {
        if count_le(ws.regions[0], cand.lead) {
            let slot = &mut best[cand.end][1];
            if slot.as_ref().is_none_or(|(t, _)| !count_le(cand.trail, *t)) {
                *slot = Some((cand.trail, Some((0, 0, c))));
            }
        }
    }
    for i in 1..len {
        for t in 1..cap {
            let Some((room, _)) = best[i][t].clone() else { continue };
            for (c, cand) in cands[i].iter().enumerate() {
                if !count_le(ws.regions[i], room.add(cand.lead)) {
                    continue;
                }
                let slot = &mut best[cand.end][t + 1];
                if slot.as_ref().is_none_or(|(r, _)| !count_le(cand.trail, *r)) {
                    *slot = Some((cand.trail, Some((i, t, c))));
                }
            }
        }
    }
    let Some(t_end) = (1..=cap).find(|&t| best[len][t].as_ref().is_some_and(|(r, _)| count_le(ws.regions[len], *r))) else {
        return Ok(FineVerdict::NoDecompositionToDepth(n));
    };
    // Recover the chunks, then place the cuts.
    let mut chunks = Vec::new();
    let (mut i, mut t) = (len, t_end);
    while i > 0 {
        let (_, back) = best[i][t].clone().expect("reachable state");
        let (pi, pt, c) = back.expect("back pointer");
        chunks.push((pi, c));
        i = pi;
        t = pt;
    }
    chunks.reverse();
    let mut cuts = vec![Gap::start()];
    for w_idx in 1..chunks.len() {
        let (start, _) = chunks[w_idx];
        let (pstart, pc) = chunks[w_idx - 1];
        let prev_trail = cands[pstart][pc].trail;
        let after_prev = Gap::after(&ws.letters[start - 1].0);
        let before_next = Gap::before(&ws.letters[start].0);
        let cut = match ws.regions[start] {
            Count::Infinite if prev_trail == Count::Infinite => before_next,
            Count::Infinite => after_prev,
            Count::Finite(k) => {
                let give = match prev_trail {
                    Count::Infinite => k,
                    Count::Finite(r) => r.min(k),
                };
                if give == 0 {
                    after_prev
                } else if give == k {
                    before_next
                } else {
                    match step_letters(reg, w, &before_next, &after_prev, give, false)? {
                        Some(p) => Gap::after(&p),
                        None => return Err(WordError::Invalid("region shorter than its count".into())),
                    }
                }
            }
        };
        cuts.push(cut);
    }
    cuts.push(Gap::end());
    let mut factors = Vec::new();
    for (k, (start, c)) in chunks.iter().enumerate() {
        let cand = &cands[*start][*c];
        let span = Interval { lo: cuts[k].clone(), hi: cuts[k + 1].clone() };
        factors.push(match &cand.factor {
            CandFactor::Letter => Factor::Letter { letter: ws.letters[*start].1.clone(), span },
            CandFactor::Run { index, sign, start: s } => {
                let view = views.iter().find(|(i, sg, _, _)| i == index && sg == sign).expect("view");
                let m = view.3;
                let run_len = cand.end - start;
                // Visible run in the family word's own order.
                let (a, b) = if *sign > 0 { (*s, s + run_len) } else { (m - s - run_len, m - s) };
                let own = &views.iter().find(|(i, sg, _, _)| i == index && *sg == 1).expect("view").2;
                let lo = if a == 0 { Gap::start() } else { Gap::after(&own.letters[a - 1].0) };
                let hi = if b == m { Gap::end() } else { Gap::before(&own.letters[b].0) };
                Factor::Sub { index: *index, interval: Interval { lo, hi }, sign: *sign, span }
            }
        });
    }
    Ok(FineVerdict::MemberWitness(Decomposition { factors, depth: Some(n) }))
}
