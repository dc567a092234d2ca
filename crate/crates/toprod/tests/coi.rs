mod common;

use common::cois::*;
use common::*;
use proptest::prelude::*;
use std::sync::OnceLock;
use toprod::coi::{audit, check_coi, extend_omega, extend_qshuffle, CoiCollection};
use toprod::groups::Registry;
use toprod::orders::{Gap, Interval};
use toprod::schemes::{check_reduced_depth, ReducedVerdict};
use toprod::words::{count_in, d_word, is_reduced_letters, project, SignRule, to_finite, WordExpr};

const CUT_DEPTH: u64 = 4;

struct Prepared {
    reg: Registry,
    fixtures: Vec<(Fixture, Vec<Gap>)>,
}

fn prepared() -> &'static Prepared {
    static P: OnceLock<Prepared> = OnceLock::new();
    P.get_or_init(|| {
        let reg = z();
        let fixtures = fixtures(&reg)
            .into_iter()
            .map(|f| {
                let c = cuts(&reg, &f.triple, CUT_DEPTH);
                (f, c)
            })
            .collect();
        Prepared { reg, fixtures }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn round_trip_hull_is_the_domain_hull(f in 0usize..6, a in any::<usize>(), b in any::<usize>()) {
        let p = prepared();
        let (fx, cuts) = &p.fixtures[f];
        let (iv, _) = pick(cuts, a, b, &[]);
        almost_identified(&p.reg, &fx.triple, &iv).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn split_hulls_differ_by_finite_fillers(
        f in 0usize..6,
        a in any::<usize>(),
        b in any::<usize>(),
        inner in proptest::collection::vec(any::<usize>(), 0..4),
    ) {
        let p = prepared();
        let (fx, cuts) = &p.fixtures[f];
        let (iv, mid) = pick(cuts, a, b, &inner);
        pieces_with_finite_fillers(&p.reg, &fx.triple, &iv, &mid).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn finite_intervals_have_finite_hulls() {
    let p = prepared();
    for (fx, _) in &p.fixtures {
        let n = finite_to_finite(&p.reg, &fx.triple, CUT_DEPTH).unwrap();
        assert!(n > 0, "{}", fx.label);
    }
}

#[test]
fn fixtures_are_cois_and_invert_cleanly() {
    let p = prepared();
    for (fx, _) in &p.fixtures {
        check_coi(&p.reg, &fx.triple, 6).unwrap_or_else(|e| panic!("{}: {e}", fx.label));
        assert!(inversion_is_involutive(&fx.triple), "{}", fx.label);
    }
}

/// Every finite initial subword ending at a letter of degree at most 5 is
/// freely reduced.
fn assert_finite_prefixes_reduced(reg: &Registry, u: &WordExpr) {
    let mut finite = 0;
    for (p, _) in project(reg, u, 5).unwrap().0 {
        let prefix = Interval::upto(&p);
        if count_in(reg, u, &prefix).unwrap().is_finite() {
            finite += 1;
            let letters = to_finite(reg, &WordExpr::sub(u.clone(), prefix)).unwrap().letters();
            assert!(is_reduced_letters(&letters), "prefix up to {p}");
        }
    }
    assert!(finite > 0);
    assert!(!matches!(check_reduced_depth(reg, u, 6).unwrap(), ReducedVerdict::NotReduced { .. }));
}

#[test]
fn omega_extension_postconditions() {
    let reg = z();
    let (coll, w) = staircase();
    let depth = 6;
    let ext = extend_omega(&reg, &coll, &w, depth, "s").unwrap();
    let degrees: Vec<u32> = ext.separators.iter().map(|(k, _)| k.group).collect();
    assert!(degrees.windows(2).all(|d| d[0] < d[1]), "{degrees:?}");
    for (m, d) in ext.body_degrees.iter().enumerate() {
        assert!(d.is_some_and(|d| d > m as u64 + 1), "body {m}: {d:?}");
    }
    assert_finite_prefixes_reduced(&reg, &ext.triple.right);
    let grown = coll.with(ext.triple).unwrap();
    let report = audit(&reg, &grown, depth).unwrap();
    assert_eq!(report.equal() + report.unknown(), report.entries.len());
    assert!(report.equal() > 0);
}

#[test]
fn shuffle_extension_postconditions() {
    let reg = z();
    for sign in [SignRule::Plus, SignRule::Alternate] {
        let (coll, w) = tails_shuffle(sign);
        let depth = 4;
        let ext = extend_qshuffle(&reg, &coll, &w, depth, "t").unwrap();
        let degrees: Vec<u32> = ext.separators.iter().map(|(k, _)| k.group).collect();
        assert!(degrees.windows(2).all(|d| d[0] < d[1]), "{degrees:?}");
        for (m, d) in ext.body_degrees.iter().enumerate() {
            assert!(d.is_some_and(|d| d > m as u64), "body {m}: {d:?}");
        }
        let WordExpr::QShuffle(src) = &w else { unreachable!() };
        let WordExpr::Ref(_, right) = &ext.triple.right else { panic!("named right word") };
        let WordExpr::QShuffle(rule) = &**right else { panic!("shuffle right word") };
        for m in 0..=depth {
            for (_, s) in src.level_sites(m, None, None) {
                assert_eq!(d_word(&reg, &rule.block(&reg, m, s).unwrap()).unwrap(), Some(m));
            }
        }
        assert!(!matches!(check_reduced_depth(&reg, &ext.triple.right, 6).unwrap(), ReducedVerdict::NotReduced { .. }));
        let grown = coll.with(ext.triple).unwrap();
        audit(&reg, &grown, 3).unwrap();
    }
}

#[test]
fn an_empty_collection_has_no_obligations() {
    assert!(audit(&z(), &CoiCollection::new(), 4).unwrap().entries.is_empty());
}
