//! Symbolic elements of the quotient of the reduced-word group by the normal
//! closure of the finite words.

use crate::coi::{varpropto_coi, CoiCollection, CoiError, Direction};
use crate::groups::Registry;
use crate::orders::{fmt_lower, fmt_upper, restrict_child, Gap, Interval, Sel};
use crate::words::{self, OmegaRule, cmp_gaps_in, count_in, finitely_different, intersect, is_empty_in, Decomposition, Factor, WordExpr};
use serde_json::{json, Value};
use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

/// `(word restricted to interval)^sign`, the interval read in the word's own order.
#[derive(Debug, Clone, PartialEq)]
pub struct SubwordRef {
    pub name: Option<Arc<str>>,
    pub word: WordExpr,
    pub interval: Interval,
    pub sign: i8,
    /// Enclosing words this factor was cut out of, innermost first.
    pub lifts: Vec<Lift>,
}

/// An enclosing word and the path from it down to a factor's word; `flip`
/// when the two are read in opposite orders.
#[derive(Debug, Clone, PartialEq)]
pub struct Lift {
    pub word: WordExpr,
    pub path: Vec<Sel>,
    pub flip: bool,
}

fn peel(w: &WordExpr) -> &WordExpr {
    match w {
        WordExpr::Ref(_, x) => peel(x),
        _ => w,
    }
}

impl SubwordRef {
    fn new(w: &WordExpr, iv: &Interval, sign: i8, lifts: &[Lift]) -> SubwordRef {
        SubwordRef { name: None, word: w.clone(), interval: iv.clone(), sign, lifts: lifts.to_vec() }
    }

    /// The word with any naming stripped; two factors over equal bases
    /// address the same positions.
    pub fn base(&self) -> &WordExpr {
        peel(&self.word)
    }

    /// The factor read as a subword of its `k`-th enclosing word (`0` is itself).
    fn lifted(&self, k: usize) -> SubwordRef {
        if k == 0 {
            return self.clone();
        }
        let l = &self.lifts[k - 1];
        let iv = if l.flip { self.interval.reversed() } else { self.interval.clone() };
        let name = match &l.word {
            WordExpr::Ref(n, _) => Some(n.clone()),
            _ => None,
        };
        SubwordRef {
            name,
            word: l.word.clone(),
            interval: iv.prefixed(&l.path),
            sign: if l.flip { -self.sign } else { self.sign },
            lifts: self.lifts[k..].to_vec(),
        }
    }

    fn label(&self) -> String {
        match &self.name {
            Some(n) => n.to_string(),
            None => self.word.to_string(),
        }
    }
}

/// A product of infinite subword classes; the empty product is the identity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArchElement {
    pub factors: Vec<SubwordRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchVerdict {
    Equal,
    Unknown,
}

impl ArchElement {
    pub fn identity() -> ArchElement {
        ArchElement::default()
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn to_json(&self) -> Value {
        if self.factors.is_empty() {
            return json!(1);
        }
        Value::Array(
            self.factors
                .iter()
                .map(|f| {
                    json!({
                        "word": f.label(),
                        "interval": {"lo": fmt_lower(&f.interval.lo), "hi": fmt_upper(&f.interval.hi)},
                        "sign": f.sign,
                    })
                })
                .collect(),
        )
    }
}

impl fmt::Display for ArchElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, x) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "[[{} {}]]", x.label(), x.interval)?;
            if x.sign < 0 {
                write!(f, "^-1")?;
            }
        }
        Ok(())
    }
}

/// The class of `w`.
pub fn beth(reg: &Registry, w: &WordExpr) -> words::Result<ArchElement> {
    beth_sub(reg, w, &Interval::full(), 1)
}

/// The class of `(w restricted to iv)^sign`.
pub fn beth_sub(reg: &Registry, w: &WordExpr, iv: &Interval, sign: i8) -> words::Result<ArchElement> {
    let mut out = Vec::new();
    factorize(reg, w, iv, sign, &[], &mut out)?;
    Ok(ArchElement { factors: normalize(reg, out)? })
}

/// Lifts for a child of `w` at `sel`; `w` itself is recorded when `own`.
fn descend(lifts: &[Lift], w: &WordExpr, sel: &Sel, own: bool) -> Vec<Lift> {
    let mut out = Vec::with_capacity(lifts.len() + 1);
    if own {
        out.push(Lift { word: w.clone(), path: vec![sel.clone()], flip: false });
    }
    for l in lifts {
        let mut path = l.path.clone();
        path.push(sel.clone());
        out.push(Lift { word: l.word.clone(), path, flip: l.flip });
    }
    out
}

fn factorize(
    reg: &Registry,
    w: &WordExpr,
    iv: &Interval,
    sign: i8,
    lifts: &[Lift],
    out: &mut Vec<SubwordRef>,
) -> words::Result<()> {
    if count_in(reg, w, iv)?.is_finite() {
        return Ok(());
    }
    match w {
        WordExpr::Ref(name, inner) => {
            let mut parts = Vec::new();
            factorize(reg, inner, iv, sign, lifts, &mut parts)?;
            for mut p in parts {
                if p.name.is_none() && p.word == **inner {
                    p.name = Some(name.clone());
                    p.word = w.clone();
                }
                for l in &mut p.lifts {
                    if l.word == **inner {
                        l.word = w.clone();
                    }
                }
                out.push(p);
            }
        }
        WordExpr::Omega(rule) => match omega_keys(rule, iv) {
            Some(keys) => {
                let keys: Vec<Sel> = if sign < 0 { keys.into_iter().rev().collect() } else { keys };
                for sel in keys {
                    let Some((lo, hi)) = restrict_child(&iv.lo, &iv.hi, &sel, false) else { continue };
                    let child = match sel {
                        Sel::Part(k) => rule.prefix[k as usize].clone(),
                        Sel::Omega(m) => rule.tail.term(reg, m)?,
                        _ => continue,
                    };
                    factorize(reg, &child, &Interval { lo, hi }, sign, &descend(lifts, w, &sel, true), out)?;
                }
            }
            None => out.push(SubwordRef::new(w, iv, sign, lifts)),
        },
        WordExpr::QShuffle(rule) => match (iv.lo.path.first(), iv.hi.path.first()) {
            (Some(a @ Sel::Rat(s)), Some(b)) if a == b && rule.site(s).is_some() => {
                let (m, site_sign) = rule.site(s).expect("site exists");
                let (lo, hi) = restrict_child(&iv.lo, &iv.hi, a, false).expect("cuts inside the block");
                let inner = descend(lifts, w, a, true);
                factorize(reg, &rule.block(reg, m, site_sign)?, &Interval { lo, hi }, sign, &inner, out)?;
            }
            _ => out.push(SubwordRef::new(w, iv, sign, lifts)),
        },
        WordExpr::Cat(parts) => {
            let n = parts.len();
            for k in 0..n {
                let i = if sign < 0 { n - 1 - k } else { k };
                let sel = Sel::Part(i as u32);
                if let Some((lo, hi)) = restrict_child(&iv.lo, &iv.hi, &sel, false) {
                    factorize(reg, &parts[i], &Interval { lo, hi }, sign, &descend(lifts, w, &sel, false), out)?;
                }
            }
        }
        WordExpr::Inv(x) => {
            let flipped: Vec<Lift> = lifts.iter().map(|l| Lift { flip: !l.flip, ..l.clone() }).collect();
            factorize(reg, x, &iv.reversed(), -sign, &flipped, out)?
        }
        WordExpr::Sub(x, j) => {
            let both = intersect(reg, x, j, iv)?;
            factorize(reg, x, &both, sign, lifts, out)?;
        }
        _ => out.push(SubwordRef::new(w, iv, sign, lifts)),
    }
    Ok(())
}

/// Most top-level blocks an omega interval is split into before it is kept whole.
const OMEGA_SPLIT: u64 = 256;

/// The top-level keys met by `iv` when it stops inside the tail.
fn omega_keys(rule: &OmegaRule, iv: &Interval) -> Option<Vec<Sel>> {
    let last = match iv.hi.path.first()? {
        Sel::Part(k) => (Some(*k), None),
        Sel::Omega(m) => (None, Some(*m)),
        _ => return None,
    };
    let first = match iv.lo.path.first() {
        None if iv.lo.after => return Some(Vec::new()),
        None => (Some(0), Some(0)),
        Some(Sel::Part(k)) => (Some(*k), Some(0)),
        Some(Sel::Omega(m)) => (None, Some(*m)),
        Some(_) => return None,
    };
    let mut keys = Vec::new();
    if let Some(a) = first.0 {
        let b = match last.0 {
            Some(b) => b,
            None => rule.prefix.len().saturating_sub(1) as u32,
        };
        keys.extend((a..=b).filter(|k| (*k as usize) < rule.prefix.len()).map(Sel::Part));
    }
    if let (Some(a), Some(b)) = (first.1, last.1) {
        if b.saturating_sub(a) > OMEGA_SPLIT {
            return None;
        }
        keys.extend((a..=b).map(Sel::Omega));
    }
    Some(keys)
}

/// Drops finite factors, merges neighbours cut from one word with finitely
/// many letters between them and cancels inverse neighbours. Neighbours from
/// different words are compared inside their innermost common enclosing word.
pub fn normalize(reg: &Registry, factors: Vec<SubwordRef>) -> words::Result<Vec<SubwordRef>> {
    let mut stack: Vec<SubwordRef> = Vec::new();
    for f in factors {
        if count_in(reg, f.base(), &f.interval)?.is_finite() {
            continue;
        }
        let mut cur = Some(f);
        while let Some(f) = cur.take() {
            let combined = match stack.last() {
                Some(top) => combine(reg, top, &f)?,
                None => None,
            };
            match combined {
                Some(c) => {
                    stack.pop();
                    cur = c;
                }
                None => stack.push(f),
            }
        }
    }
    stack.into_iter().map(|f| lower(reg, f)).collect()
}

/// Replaces a factor by its refactorization for as long as that is a
/// single factor.
fn lower(reg: &Registry, mut f: SubwordRef) -> words::Result<SubwordRef> {
    loop {
        let mut parts = Vec::new();
        factorize(reg, &f.word, &f.interval, f.sign, &f.lifts, &mut parts)?;
        match <[SubwordRef; 1]>::try_from(parts) {
            Ok([g]) if g != f => f = g,
            _ => return Ok(f),
        }
    }
}

/// `x^s y^-s` over one word, when the two meet at a common end up to
/// finitely many letters: what is left after cancelling.
fn cancel(reg: &Registry, w: &WordExpr, x: &SubwordRef, y: &SubwordRef) -> words::Result<Option<SubwordRef>> {
    let (a, b) = (&x.interval, &y.interval);
    let (shared, other) = if x.sign > 0 { ((&a.hi, &b.hi), (&a.lo, &b.lo)) } else { ((&a.lo, &b.lo), (&a.hi, &b.hi)) };
    if !gaps_close(reg, w, shared.0, shared.1)? {
        return Ok(None);
    }
    let (lo, hi, sign) = if cmp_gaps_in(reg, w, other.0, other.1)? == Ordering::Greater {
        (other.1, other.0, -1)
    } else {
        (other.0, other.1, 1)
    };
    Ok(Some(SubwordRef { interval: Interval { lo: lo.clone(), hi: hi.clone() }, sign, ..x.clone() }))
}

fn gaps_close(reg: &Registry, w: &WordExpr, g: &Gap, h: &Gap) -> words::Result<bool> {
    let (lo, hi) = if cmp_gaps_in(reg, w, g, h)? == Ordering::Greater { (h, g) } else { (g, h) };
    Ok(count_in(reg, w, &Interval { lo: lo.clone(), hi: hi.clone() })?.is_finite())
}

/// The product of two neighbours as at most one factor, read inside the
/// innermost word enclosing both where that works.
fn combine(reg: &Registry, top: &SubwordRef, f: &SubwordRef) -> words::Result<Option<Option<SubwordRef>>> {
    for (i, j) in common_words(top, f) {
        let (top, g) = (top.lifted(i), f.lifted(j));
        let w = top.base().clone();
        if top.sign == g.sign {
            let (first, second) = if g.sign > 0 { (&top, &g) } else { (&g, &top) };
            if cmp_gaps_in(reg, &w, &first.interval.hi, &second.interval.lo)? != Ordering::Greater
                && count_in(reg, &w, &Interval { lo: first.interval.hi.clone(), hi: second.interval.lo.clone() })?.is_finite()
            {
                let merged = Interval { lo: first.interval.lo.clone(), hi: second.interval.hi.clone() };
                return Ok(Some(Some(SubwordRef { interval: merged, ..top })));
            }
        } else if let Some(rest) = cancel(reg, &w, &top, &g)? {
            let finite = count_in(reg, &w, &rest.interval)?.is_finite();
            return Ok(Some((!finite).then_some(rest)));
        }
    }
    Ok(None)
}

/// Levels `(i, j)` at which `a` and `b` are read inside the same word,
/// innermost first.
fn common_words(a: &SubwordRef, b: &SubwordRef) -> Vec<(usize, usize)> {
    let level = |f: &SubwordRef, k: usize| -> WordExpr {
        if k == 0 {
            f.base().clone()
        } else {
            peel(&f.lifts[k - 1].word).clone()
        }
    };
    let mut out = Vec::new();
    for i in 0..=a.lifts.len() {
        let wa = level(a, i);
        for j in 0..=b.lifts.len() {
            if level(b, j) == wa {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn arch_mul(reg: &Registry, a: &ArchElement, b: &ArchElement) -> words::Result<ArchElement> {
    let mut all = a.factors.clone();
    all.extend(b.factors.iter().cloned());
    Ok(ArchElement { factors: normalize(reg, all)? })
}

pub fn arch_inv(a: &ArchElement) -> ArchElement {
    ArchElement { factors: a.factors.iter().rev().map(|f| SubwordRef { sign: -f.sign, ..f.clone() }).collect() }
}

/// `Equal` when the normal forms agree factor by factor up to finitely many
/// letters; `Unknown` otherwise.
pub fn arch_eq(reg: &Registry, a: &ArchElement, b: &ArchElement) -> words::Result<ArchVerdict> {
    let a = normalize(reg, a.factors.clone())?;
    let b = normalize(reg, b.factors.clone())?;
    if a.len() != b.len() {
        return Ok(ArchVerdict::Unknown);
    }
    for (x, y) in a.iter().zip(&b) {
        if x.base() != y.base() || x.sign != y.sign || !finitely_different(reg, x.base(), &x.interval, &y.interval)? {
            return Ok(ArchVerdict::Unknown);
        }
    }
    Ok(ArchVerdict::Equal)
}

/// The image of `w` under the map induced by a collection, read off a
/// decomposition of `w` over the collection's left words.
pub fn phi0_eval(reg: &Registry, coll: &CoiCollection, w: &WordExpr, witness: &Decomposition) -> Result<ArchElement, CoiError> {
    if witness.factors.is_empty() && !is_empty_in(reg, w, &Interval::full())? {
        return Err(CoiError::BadWitness("empty decomposition of a nonempty word".into()));
    }
    let mut out = Vec::new();
    for f in &witness.factors {
        let Factor::Sub { index, interval, sign, .. } = f else { continue };
        let t = coll.triples.get(*index).ok_or_else(|| CoiError::BadWitness(format!("factor index {index}")))?;
        if count_in(reg, &t.left, interval)?.is_finite() {
            continue;
        }
        let j = varpropto_coi(reg, t, interval, Direction::Forward)?;
        factorize(reg, &t.right, &j, *sign, &[], &mut out)?;
    }
    Ok(ArchElement { factors: normalize(reg, out)? })
}
