//! Random words over the staircase collection for the induced-map checks.

use super::*;
use toprod::arch::{arch_eq, phi0_eval, ArchElement, ArchVerdict};
use toprod::words::{structural_witness, Decomposition, Factor};

/// One piece of a random word over the staircase collection.
#[derive(Debug, Clone)]
pub enum Piece {
    Tail { index: usize, from: u64, inverted: bool },
    Letter(u32, i64),
}

pub fn random_pieces(r: &mut ChaCha8Rng) -> Vec<Piece> {
    (0..r.gen_range(0..5))
        .map(|_| {
            if r.gen_range(0..3) == 0 {
                Piece::Letter(r.gen_range(0..4), if r.gen() { 1 } else { -1 })
            } else {
                Piece::Tail { index: r.gen_range(0..2), from: r.gen_range(0..4), inverted: r.gen() }
            }
        })
        .collect()
}

pub fn word(coll: &CoiCollection, pieces: &[Piece]) -> WordExpr {
    WordExpr::cat(
        pieces
            .iter()
            .map(|p| match p {
                Piece::Letter(n, v) => lit(*n, *v),
                Piece::Tail { index, from, inverted } => {
                    let t = WordExpr::sub(coll.triples[*index].left.clone(), Interval::from(&om(*from)));
                    if *inverted {
                        WordExpr::inv(t)
                    } else {
                        t
                    }
                }
            })
            .collect(),
    )
}

/// The same decomposition as the structural one, except that each tail is
/// cut in two at `from + 1`.
pub fn split_witness(pieces: &[Piece]) -> Decomposition {
    let mut factors = Vec::new();
    for p in pieces {
        let Piece::Tail { index, from, inverted } = *p else { continue };
        let sign = if inverted { -1 } else { 1 };
        let mut halves = vec![Interval::closed(&om(from), &om(from + 1)), Interval::from(&om(from + 2))];
        if inverted {
            halves.reverse();
        }
        for interval in halves {
            factors.push(Factor::Sub { index, interval, sign, span: Interval::full() });
        }
    }
    Decomposition { factors, depth: None }
}

pub fn phi0(reg: &Registry, coll: &CoiCollection, w: &WordExpr) -> ArchElement {
    let d = structural_witness(reg, w, &coll.left_words()).unwrap().expect("structural witness");
    phi0_eval(reg, coll, w, &d).unwrap()
}

pub fn equal(reg: &Registry, a: &ArchElement, b: &ArchElement) -> bool {
    arch_eq(reg, a, b).unwrap() == ArchVerdict::Equal
}

