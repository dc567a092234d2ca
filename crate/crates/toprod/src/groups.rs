//! Group specifications, elements and the registry `n -> G_n`.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("cyclic group order must be at least 2, got {0}")]
    BadOrder(u64),
    #[error("element {elem} does not belong to {spec}")]
    NotAnElement { spec: String, elem: String },
    #[error("letter value in group {0} is the identity")]
    IdentityLetter(u32),
    #[error("group {0} has no {1}")]
    Missing(u32, &'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupSpec {
    InfiniteCyclic,
    FiniteCyclic(u64),
    FreeProduct(Box<GroupSpec>, Box<GroupSpec>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::L => Side::R,
            Side::R => Side::L,
        }
    }
}

/// Cyclic elements are integers (residues for finite cyclic groups); free
/// product elements are alternating, freely reduced syllable lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupElement {
    Int(i64),
    Free(Vec<(Side, GroupElement)>),
}

impl GroupSpec {
    pub fn validate(&self) -> Result<(), GroupError> {
        match self {
            GroupSpec::InfiniteCyclic => Ok(()),
            GroupSpec::FiniteCyclic(k) if *k < 2 => Err(GroupError::BadOrder(*k)),
            GroupSpec::FiniteCyclic(_) => Ok(()),
            GroupSpec::FreeProduct(l, r) => {
                l.validate()?;
                r.validate()
            }
        }
    }

    fn factor(&self, side: Side) -> &GroupSpec {
        match (self, side) {
            (GroupSpec::FreeProduct(l, _), Side::L) => l,
            (GroupSpec::FreeProduct(_, r), Side::R) => r,
            _ => self,
        }
    }

    /// Builds the element represented by the integer `n` in a cyclic group.
    pub fn int(&self, n: i64) -> GroupElement {
        match self {
            GroupSpec::FiniteCyclic(k) => GroupElement::Int(n.rem_euclid(*k as i64)),
            _ => GroupElement::Int(n),
        }
    }
}

fn not_an_element(spec: &GroupSpec, e: &GroupElement) -> GroupError {
    GroupError::NotAnElement { spec: spec.to_string(), elem: e.to_string() }
}

pub fn g_identity(spec: &GroupSpec) -> GroupElement {
    match spec {
        GroupSpec::FreeProduct(..) => GroupElement::Free(Vec::new()),
        _ => GroupElement::Int(0),
    }
}

pub fn g_validate(spec: &GroupSpec, e: &GroupElement) -> Result<(), GroupError> {
    match (spec, e) {
        (GroupSpec::InfiniteCyclic, GroupElement::Int(_)) => Ok(()),
        (GroupSpec::FiniteCyclic(k), GroupElement::Int(v)) if *v >= 0 && (*v as u64) < *k => Ok(()),
        (GroupSpec::FreeProduct(..), GroupElement::Free(syls)) => {
            for (i, (side, x)) in syls.iter().enumerate() {
                if i > 0 && syls[i - 1].0 == *side {
                    return Err(not_an_element(spec, e));
                }
                let f = spec.factor(*side);
                g_validate(f, x)?;
                if g_is_identity(f, x) {
                    return Err(not_an_element(spec, e));
                }
            }
            Ok(())
        }
        _ => Err(not_an_element(spec, e)),
    }
}

pub fn g_is_identity(spec: &GroupSpec, e: &GroupElement) -> bool {
    match (spec, e) {
        (GroupSpec::FiniteCyclic(k), GroupElement::Int(v)) => v.rem_euclid(*k as i64) == 0,
        (_, GroupElement::Int(v)) => *v == 0,
        (_, GroupElement::Free(s)) => s.is_empty(),
    }
}

pub fn g_mul(spec: &GroupSpec, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
    match (spec, a, b) {
        (GroupSpec::InfiniteCyclic, GroupElement::Int(x), GroupElement::Int(y)) => {
            Ok(GroupElement::Int(x.wrapping_add(*y)))
        }
        (GroupSpec::FiniteCyclic(k), GroupElement::Int(x), GroupElement::Int(y)) => {
            let k = *k as i64;
            Ok(GroupElement::Int((x.rem_euclid(k) + y.rem_euclid(k)).rem_euclid(k)))
        }
        (GroupSpec::FreeProduct(..), GroupElement::Free(xs), GroupElement::Free(ys)) => {
            let mut out = xs.clone();
            let mut rest = ys.iter().peekable();
            while let (Some(last), Some(next)) = (out.last().cloned(), rest.peek()) {
                if last.0 != next.0 {
                    break;
                }
                let f = spec.factor(last.0);
                let merged = g_mul(f, &last.1, &next.1)?;
                rest.next();
                out.pop();
                if !g_is_identity(f, &merged) {
                    out.push((last.0, merged));
                    break;
                }
            }
            out.extend(rest.cloned());
            Ok(GroupElement::Free(out))
        }
        _ => Err(not_an_element(spec, if g_validate(spec, a).is_err() { a } else { b })),
    }
}

pub fn g_inv(spec: &GroupSpec, a: &GroupElement) -> Result<GroupElement, GroupError> {
    match (spec, a) {
        (GroupSpec::InfiniteCyclic, GroupElement::Int(x)) => Ok(GroupElement::Int(x.wrapping_neg())),
        (GroupSpec::FiniteCyclic(k), GroupElement::Int(x)) => {
            Ok(GroupElement::Int((-x.rem_euclid(*k as i64)).rem_euclid(*k as i64)))
        }
        (GroupSpec::FreeProduct(..), GroupElement::Free(xs)) => {
            let mut out = Vec::with_capacity(xs.len());
            for (side, x) in xs.iter().rev() {
                out.push((*side, g_inv(spec.factor(*side), x)?));
            }
            Ok(GroupElement::Free(out))
        }
        _ => Err(not_an_element(spec, a)),
    }
}

pub fn g_pow(spec: &GroupSpec, a: &GroupElement, k: i64) -> Result<GroupElement, GroupError> {
    let base = if k < 0 { g_inv(spec, a)? } else { a.clone() };
    if let (GroupSpec::InfiniteCyclic, GroupElement::Int(x)) = (spec, &base) {
        return Ok(GroupElement::Int(x.wrapping_mul(k.unsigned_abs() as i64)));
    }
    if let (GroupSpec::FiniteCyclic(m), GroupElement::Int(x)) = (spec, &base) {
        let m = *m as i128;
        let v = (*x as i128 * k.unsigned_abs() as i128).rem_euclid(m);
        return Ok(GroupElement::Int(v as i64));
    }
    let mut acc = g_identity(spec);
    let mut sq = base;
    let mut n = k.unsigned_abs();
    while n > 0 {
        if n & 1 == 1 {
            acc = g_mul(spec, &acc, &sq)?;
        }
        n >>= 1;
        if n > 0 {
            sq = g_mul(spec, &sq, &sq)?;
        }
    }
    Ok(acc)
}

pub fn g_has_involution(spec: &GroupSpec) -> bool {
    match spec {
        GroupSpec::InfiniteCyclic => false,
        GroupSpec::FiniteCyclic(k) => k % 2 == 0,
        GroupSpec::FreeProduct(l, r) => g_has_involution(l) || g_has_involution(r),
    }
}

pub fn g_involution(spec: &GroupSpec) -> Option<GroupElement> {
    match spec {
        GroupSpec::InfiniteCyclic => None,
        GroupSpec::FiniteCyclic(k) => (k % 2 == 0).then(|| GroupElement::Int((k / 2) as i64)),
        GroupSpec::FreeProduct(l, r) => g_involution(l)
            .map(|e| GroupElement::Free(vec![(Side::L, e)]))
            .or_else(|| g_involution(r).map(|e| GroupElement::Free(vec![(Side::R, e)]))),
    }
}

/// A fixed non-identity element.
pub fn g_nontrivial(spec: &GroupSpec) -> GroupElement {
    match spec {
        GroupSpec::FreeProduct(l, _) => GroupElement::Free(vec![(Side::L, g_nontrivial(l))]),
        _ => GroupElement::Int(1),
    }
}

pub fn g_infinite_order_element(spec: &GroupSpec) -> Option<GroupElement> {
    match spec {
        GroupSpec::InfiniteCyclic => Some(GroupElement::Int(1)),
        GroupSpec::FiniteCyclic(_) => None,
        GroupSpec::FreeProduct(l, r) => Some(GroupElement::Free(vec![
            (Side::L, g_nontrivial(l)),
            (Side::R, g_nontrivial(r)),
        ])),
    }
}

/// Whether `e` has infinite order.
pub fn g_has_infinite_order(spec: &GroupSpec, e: &GroupElement) -> bool {
    match (spec, e) {
        (GroupSpec::InfiniteCyclic, GroupElement::Int(v)) => *v != 0,
        (GroupSpec::FreeProduct(..), GroupElement::Free(syls)) => {
            // Cyclically reduce; a cyclically reduced element of syllable
            // length at least two has infinite order.
            let mut s = syls.clone();
            while s.len() >= 2 && s[0].0 == s[s.len() - 1].0 {
                let side = s[0].0;
                let f = spec.factor(side);
                let first = s.remove(0);
                let last = s.pop().expect("length at least one");
                match g_mul(f, &last.1, &first.1) {
                    Ok(m) if !g_is_identity(f, &m) => s.push((side, m)),
                    Ok(_) => {}
                    Err(_) => return false,
                }
            }
            match s.as_slice() {
                [] => false,
                [(side, x)] => g_has_infinite_order(spec.factor(*side), x),
                _ => true,
            }
        }
        _ => false,
    }
}

/// If `x = base^e` for some `e` with `1 <= |e| <= bound`, returns the `e` of
/// least absolute value (positive first).
pub fn g_power_exponent(
    spec: &GroupSpec,
    base: &GroupElement,
    x: &GroupElement,
    bound: i64,
) -> Result<Option<i64>, GroupError> {
    if let (GroupSpec::InfiniteCyclic, GroupElement::Int(b), GroupElement::Int(v)) = (spec, base, x) {
        return Ok((*b != 0 && v % b == 0 && v / b != 0 && (v / b).abs() <= bound).then(|| v / b));
    }
    let mut pos = base.clone();
    let inv = g_inv(spec, base)?;
    let mut neg = inv.clone();
    for e in 1..=bound {
        if &pos == x {
            return Ok(Some(e));
        }
        if &neg == x {
            return Ok(Some(-e));
        }
        pos = g_mul(spec, &pos, base)?;
        neg = g_mul(spec, &neg, &inv)?;
    }
    Ok(None)
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::InfiniteCyclic => write!(f, "Z"),
            GroupSpec::FiniteCyclic(k) => write!(f, "(zmod {k})"),
            GroupSpec::FreeProduct(l, r) => write!(f, "(free {l} {r})"),
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Int(v) => write!(f, "{v}"),
            GroupElement::Free(syls) if syls.len() == 1 => {
                let (s, x) = &syls[0];
                write!(f, "({} {x})", if *s == Side::L { "l" } else { "r" })
            }
            GroupElement::Free(syls) => {
                write!(f, "(*")?;
                for (s, x) in syls {
                    write!(f, " ({} {x})", if *s == Side::L { "l" } else { "r" })?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A non-identity element of a named group `G_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub group: u32,
    pub value: GroupElement,
}

impl Letter {
    pub fn new(reg: &Registry, group: u32, value: GroupElement) -> Result<Letter, GroupError> {
        let spec = reg.spec(group);
        g_validate(spec, &value)?;
        if g_is_identity(spec, &value) {
            return Err(GroupError::IdentityLetter(group));
        }
        Ok(Letter { group, value })
    }

    pub fn inverse(&self, reg: &Registry) -> Letter {
        let value = g_inv(reg.spec(self.group), &self.value).expect("letter validated at construction");
        Letter { group: self.group, value }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(lit {} {})", self.group, self.value)
    }
}

/// `n -> G_n`: a finite table followed by a spec repeated forever.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Registry {
    pub table: Vec<GroupSpec>,
    pub tail: GroupSpec,
}

impl Registry {
    pub fn new(table: Vec<GroupSpec>, tail: GroupSpec) -> Result<Registry, GroupError> {
        for s in table.iter().chain(std::iter::once(&tail)) {
            s.validate()?;
        }
        Ok(Registry { table, tail })
    }

    pub fn uniform(spec: GroupSpec) -> Registry {
        Registry { table: Vec::new(), tail: spec }
    }

    pub fn spec(&self, n: u32) -> &GroupSpec {
        self.table.get(n as usize).unwrap_or(&self.tail)
    }

    pub fn has_involutions(&self) -> bool {
        self.table.iter().chain(std::iter::once(&self.tail)).any(g_has_involution)
    }

    pub fn involution(&self, n: u32) -> Result<Letter, GroupError> {
        g_involution(self.spec(n))
            .map(|value| Letter { group: n, value })
            .ok_or(GroupError::Missing(n, "involution"))
    }

    pub fn infinite_order(&self, n: u32) -> Result<Letter, GroupError> {
        g_infinite_order_element(self.spec(n))
            .map(|value| Letter { group: n, value })
            .ok_or(GroupError::Missing(n, "element of infinite order"))
    }

    /// The canonical fresh letter of `G_n`: infinite order when available.
    pub fn fresh(&self, n: u32) -> Letter {
        let spec = self.spec(n);
        let value = g_infinite_order_element(spec).unwrap_or_else(|| g_nontrivial(spec));
        Letter { group: n, value }
    }

    pub fn mul(&self, n: u32, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        g_mul(self.spec(n), a, b)
    }

    pub fn is_identity(&self, n: u32, a: &GroupElement) -> bool {
        g_is_identity(self.spec(n), a)
    }

    /// Registry whose slot `n` is `G_{2n} * G_{2n+1}`.
    pub fn paired(&self) -> Registry {
        let len = self.table.len().div_ceil(2);
        let table = (0..len as u32)
            .map(|n| GroupSpec::FreeProduct(Box::new(self.spec(2 * n).clone()), Box::new(self.spec(2 * n + 1).clone())))
            .collect();
        let tail = GroupSpec::FreeProduct(Box::new(self.tail.clone()), Box::new(self.tail.clone()));
        Registry { table, tail }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> GroupSpec {
        GroupSpec::InfiniteCyclic
    }
    fn zm(k: u64) -> GroupSpec {
        GroupSpec::FiniteCyclic(k)
    }
    fn free(a: GroupSpec, b: GroupSpec) -> GroupSpec {
        GroupSpec::FreeProduct(Box::new(a), Box::new(b))
    }
    fn syl(s: Side, v: i64) -> (Side, GroupElement) {
        (s, GroupElement::Int(v))
    }

    #[test]
    fn dihedral_square_has_four_syllables() {
        let g = free(zm(2), zm(2));
        let ab = GroupElement::Free(vec![syl(Side::L, 1), syl(Side::R, 1)]);
        let sq = g_mul(&g, &ab, &ab).unwrap();
        assert_eq!(sq, GroupElement::Free(vec![syl(Side::L, 1), syl(Side::R, 1), syl(Side::L, 1), syl(Side::R, 1)]));
    }

    #[test]
    fn free_inverse_reverses_syllables() {
        let g = free(z(), z());
        let x = GroupElement::Free(vec![syl(Side::L, 2), syl(Side::R, 1)]);
        assert_eq!(g_inv(&g, &x).unwrap(), GroupElement::Free(vec![syl(Side::R, -1), syl(Side::L, -2)]));
        let e = g_mul(&g, &x, &g_inv(&g, &x).unwrap()).unwrap();
        assert!(g_is_identity(&g, &e));
    }

    #[test]
    fn involutions() {
        assert!(!g_has_involution(&free(zm(3), z())));
        assert!(g_has_involution(&zm(4)));
        assert!(!g_has_involution(&zm(5)));
        assert!(g_has_involution(&free(z(), zm(2))));
        assert_eq!(g_involution(&zm(6)), Some(GroupElement::Int(3)));
    }

    #[test]
    fn free_product_element_has_infinite_order() {
        let g = free(z(), z());
        let h = g_infinite_order_element(&g).unwrap();
        assert_eq!(h, GroupElement::Free(vec![syl(Side::L, 1), syl(Side::R, 1)]));
        for k in 1..=20 {
            assert!(!g_is_identity(&g, &g_pow(&g, &h, k).unwrap()));
        }
        assert_eq!(g_infinite_order_element(&zm(7)), None);
        let d = free(zm(2), zm(2));
        let h = g_infinite_order_element(&d).unwrap();
        for k in 1..=20 {
            assert!(!g_is_identity(&d, &g_pow(&d, &h, k).unwrap()));
        }
    }

    #[test]
    fn merging_cancels_across_boundary() {
        let g = free(z(), zm(3));
        let a = GroupElement::Free(vec![syl(Side::L, 1), syl(Side::R, 2)]);
        let b = GroupElement::Free(vec![syl(Side::R, 1), syl(Side::L, 4)]);
        assert_eq!(g_mul(&g, &a, &b).unwrap(), GroupElement::Free(vec![syl(Side::L, 5)]));
    }

    #[test]
    fn validation_rejects_malformed_elements() {
        let g = free(z(), z());
        assert!(g_validate(&g, &GroupElement::Free(vec![syl(Side::L, 1), syl(Side::L, 1)])).is_err());
        assert!(g_validate(&g, &GroupElement::Free(vec![syl(Side::L, 0)])).is_err());
        assert!(g_validate(&zm(3), &GroupElement::Int(3)).is_err());
        assert!(g_validate(&z(), &GroupElement::Free(vec![])).is_err());
        assert!(GroupSpec::FiniteCyclic(1).validate().is_err());
    }

    #[test]
    fn registry_lookup_and_letters() {
        let reg = Registry::new(vec![zm(2), z()], zm(4)).unwrap();
        assert_eq!(reg.spec(0), &zm(2));
        assert_eq!(reg.spec(9), &zm(4));
        assert!(Letter::new(&reg, 1, GroupElement::Int(0)).is_err());
        assert!(reg.involution(1).is_err());
        assert_eq!(reg.involution(5).unwrap().value, GroupElement::Int(2));
        assert_eq!(reg.fresh(0).value, GroupElement::Int(1));
        assert_eq!(g_power_exponent(&z(), &GroupElement::Int(2), &GroupElement::Int(-6), 10).unwrap(), Some(-3));
        assert_eq!(g_power_exponent(&zm(5), &GroupElement::Int(2), &GroupElement::Int(1), 10).unwrap(), Some(-2));
    }
}
