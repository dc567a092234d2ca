//! Coi fixtures and the hull properties checked on them.

use super::*;
use std::cmp::Ordering;
use toprod::coi::{
    coi_invert, extend_omega, extend_qshuffle, extend_representative, raise_triple, varpropto_coi, CoiTriple,
    Direction,
};
use toprod::orders::{hull_by_scan, Count, Gap};
use toprod::words::{cmp_gaps_in, count_in, difference_counts, extremum, project, structural_witness};

pub struct Fixture {
    pub label: &'static str,
    pub triple: CoiTriple,
}

pub fn fixtures(reg: &Registry) -> Vec<Fixture> {
    let p = powers(1);
    let q = powers(2);
    let parity = CoiTriple {
        name: "even".into(),
        left: p.clone(),
        map: CoiMap::Identity(CloseSubsetSpec::ResidueClass { modulus: 2, residue: 0 }),
        right: p.clone(),
    };
    let holes = CoiTriple {
        name: "holes".into(),
        left: q.clone(),
        map: CoiMap::Identity(CloseSubsetSpec::CofiniteExcept(vec![om(1), om(3)])),
        right: q.clone(),
    };
    let coll = CoiCollection { triples: vec![identity("p", p.clone()), identity("q", q.clone())] };
    let w = WordExpr::cat(vec![
        WordExpr::sub(p.clone(), Interval::from(&om(2))),
        WordExpr::inv(WordExpr::sub(q.clone(), Interval::from(&om(1)))),
    ]);
    let witness = structural_witness(reg, &w, &coll.left_words()).unwrap().expect("structural witness");
    let rep = extend_representative(reg, &coll, &w, &witness, "rep").unwrap();
    let raised = raise_triple(reg, &rep, 2, "rep_r2").unwrap();
    let (scoll, stair) = staircase();
    let omega = extend_omega(reg, &scoll, &stair, 6, "stair").unwrap().triple;
    let (tcoll, tails) = tails_shuffle(SignRule::Alternate);
    let shuffle = extend_qshuffle(reg, &tcoll, &tails, 3, "tails").unwrap().triple;
    vec![
        Fixture { label: "residue identity", triple: parity },
        Fixture { label: "cofinite identity", triple: holes },
        Fixture { label: "representative", triple: rep },
        Fixture { label: "raised representative", triple: raised },
        Fixture { label: "omega extension", triple: omega },
        Fixture { label: "shuffle extension", triple: shuffle },
    ]
}

/// Cuts at letters of the left word of degree at most `depth`.
pub fn cuts(reg: &Registry, t: &CoiTriple, depth: u64) -> Vec<Gap> {
    let mut out = vec![Gap::start()];
    for (p, _) in project(reg, &t.left, depth).unwrap().0 {
        out.push(Gap::before(&p));
        out.push(Gap::after(&p));
    }
    out.push(Gap::end());
    out
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

pub fn same(reg: &Registry, w: &WordExpr, a: &Interval, b: &Interval) -> Result<bool, String> {
    let (x, y) = difference_counts(reg, w, a, b).map_err(err)?;
    Ok(x == Count::Finite(0) && y == Count::Finite(0))
}

fn is_empty(reg: &Registry, w: &WordExpr, iv: &Interval) -> Result<bool, String> {
    Ok(count_in(reg, w, iv).map_err(err)?.is_zero())
}

/// `hull(hull(I, iota), iota^-1)` against the hull of `I ∩ dom(iota)`
/// found by scanning the left word directly.
pub fn almost_identified(reg: &Registry, t: &CoiTriple, iv: &Interval) -> Result<(), String> {
    let there = varpropto_coi(reg, t, iv, Direction::Forward).map_err(err)?;
    let back = varpropto_coi(reg, t, &there, Direction::Backward).map_err(err)?;
    let scan = hull_by_scan(
        |cur, least| extremum(reg, &t.left, cur, least),
        |p| toprod::coi::map_pos(reg, t, p).unwrap().is_some(),
        iv,
    )
    .map_err(err)?;
    if !same(reg, &t.left, &back, &scan)? {
        return Err(format!("{}: round trip of {iv:?} is {back:?}, domain hull is {scan:?}", t.name));
    }
    Ok(())
}

/// Splits `iv` at the given cuts (sorted, inside `iv`) and checks that the
/// hull of the whole is the piece hulls in order with finite fillers.
pub fn pieces_with_finite_fillers(reg: &Registry, t: &CoiTriple, iv: &Interval, inner: &[Gap]) -> Result<(), String> {
    let mut bounds = vec![iv.lo.clone()];
    bounds.extend(inner.iter().cloned());
    bounds.push(iv.hi.clone());
    let whole = varpropto_coi(reg, t, iv, Direction::Forward).map_err(err)?;
    let mut hulls = Vec::new();
    for pair in bounds.windows(2) {
        let piece = Interval { lo: pair[0].clone(), hi: pair[1].clone() };
        let h = varpropto_coi(reg, t, &piece, Direction::Forward).map_err(err)?;
        if !is_empty(reg, &t.right, &h)? {
            hulls.push(h);
        }
    }
    if hulls.is_empty() {
        return if is_empty(reg, &t.right, &whole)? { Ok(()) } else { Err(format!("{}: pieces empty, whole not", t.name)) };
    }
    let mut edges = vec![whole.lo.clone()];
    for h in &hulls {
        edges.push(h.lo.clone());
        edges.push(h.hi.clone());
    }
    edges.push(whole.hi.clone());
    for (k, pair) in edges.windows(2).enumerate() {
        if cmp_gaps_in(reg, &t.right, &pair[0], &pair[1]).map_err(err)? == Ordering::Greater {
            return Err(format!("{}: hull edges out of order at {k}", t.name));
        }
        if k % 2 == 0 {
            let filler = Interval { lo: pair[0].clone(), hi: pair[1].clone() };
            if !count_in(reg, &t.right, &filler).map_err(err)?.is_finite() {
                return Err(format!("{}: filler {filler:?} is infinite", t.name));
            }
        }
    }
    Ok(())
}

/// Every finite interval between letters of degree at most `depth` has a
/// finite hull.
pub fn finite_to_finite(reg: &Registry, t: &CoiTriple, depth: u64) -> Result<usize, String> {
    let pts = project(reg, &t.left, depth).map_err(err)?.0;
    let mut checked = 0;
    for i in 0..pts.len() {
        for j in i..pts.len() {
            let iv = Interval::closed(&pts[i].0, &pts[j].0);
            if !count_in(reg, &t.left, &iv).map_err(err)?.is_finite() {
                continue;
            }
            let h = varpropto_coi(reg, t, &iv, Direction::Forward).map_err(err)?;
            if !count_in(reg, &t.right, &h).map_err(err)?.is_finite() {
                return Err(format!("{}: finite {iv:?} has infinite hull {h:?}", t.name));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

pub fn inversion_is_involutive(t: &CoiTriple) -> bool {
    coi_invert(&coi_invert(t)) == *t
}

/// Picks `lo <= hi` among the cuts and up to three cuts between them.
pub fn pick(cuts: &[Gap], a: usize, b: usize, inner: &[usize]) -> (Interval, Vec<Gap>) {
    let (i, j) = (a % cuts.len(), b % cuts.len());
    let (i, j) = (i.min(j), i.max(j));
    let mut mid: Vec<usize> = inner.iter().filter(|_| j > i + 1).map(|k| i + 1 + k % (j - i - 1)).collect();
    mid.sort();
    mid.dedup();
    (Interval { lo: cuts[i].clone(), hi: cuts[j].clone() }, mid.into_iter().map(|k| cuts[k].clone()).collect())
}
