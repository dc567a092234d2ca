//! Free reduction and equivalence of finite projections.

use super::{project, FiniteWord, Result, WordExpr};
use crate::groups::{Letter, Registry};

/// The reduced form of a finite word. Merged letters keep the position of
/// the leftmost letter that contributed to them.
pub fn free_reduce(reg: &Registry, w: &FiniteWord) -> Result<FiniteWord> {
    let mut stack: Vec<(crate::orders::Position, Letter)> = Vec::with_capacity(w.len());
    for (p, l) in &w.0 {
        match stack.last_mut() {
            Some((_, top)) if top.group == l.group => {
                let v = reg.mul(l.group, &top.value, &l.value)?;
                if reg.is_identity(l.group, &v) {
                    stack.pop();
                } else {
                    top.value = v;
                }
            }
            _ => stack.push((p.clone(), l.clone())),
        }
    }
    Ok(FiniteWord(stack))
}

pub fn reduce_letters(reg: &Registry, w: &[Letter]) -> Result<Vec<Letter>> {
    Ok(free_reduce(reg, &FiniteWord::from_letters(w.to_vec()))?.letters())
}

pub fn is_reduced_letters(w: &[Letter]) -> bool {
    w.windows(2).all(|p| p[0].group != p[1].group)
}

/// The reduced form of `a b` for reduced `a`, `b`.
pub fn reduced_mul(reg: &Registry, a: &[Letter], b: &[Letter]) -> Result<Vec<Letter>> {
    let mut out = a.to_vec();
    out.extend_from_slice(b);
    reduce_letters(reg, &out)
}

pub fn inverse_letters(reg: &Registry, w: &[Letter]) -> Vec<Letter> {
    w.iter().rev().map(|l| l.inverse(reg)).collect()
}

/// Whether `p_N(W)` and `p_N(V)` have the same reduced form.
pub fn equiv_depth(reg: &Registry, w: &WordExpr, v: &WordExpr, n: u64) -> Result<bool> {
    let a = free_reduce(reg, &project(reg, w, n)?)?.letters();
    let b = free_reduce(reg, &project(reg, v, n)?)?.letters();
    Ok(a == b)
}

/// The least depth up to `n` at which the reduced projections differ.
pub fn first_difference(reg: &Registry, w: &WordExpr, v: &WordExpr, n: u64) -> Result<Option<u64>> {
    for k in 0..=n {
        if !equiv_depth(reg, w, v, k)? {
            return Ok(Some(k));
        }
    }
    Ok(None)
}
