//! Named example words, index transforms, and a bounded driver that grows a
//! collection by alternating left and right extension steps.

use crate::coi::{
    audit, coi_invert, diagonal_word, extend_omega, extend_qshuffle, extend_representative, CoiCollection, CoiError, CoiMap,
    CoiTriple,
};
use crate::groups::{GroupElement, GroupError, Letter, Registry, Side};
use crate::orders::{CloseSubsetSpec, Gap, Interval, Position, Sel};
use crate::words::{
    structural_witness, Affine, FiberKind, FiberTail, FiniteWord, LazyTerms, OmegaRule, QRule, Relabeling, SignRule, TermRule,
    WordError, WordExpr,
};
use num_rational::Rational64;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GalleryError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Coi(#[from] CoiError),
    #[error("registry has no involution in G_{0}")]
    NoInvolution(u32),
    #[error("step budget {budget} ends before goal {goal}")]
    Budget { budget: usize, goal: usize },
}

pub type Result<T, E = GalleryError> = std::result::Result<T, E>;

/// The involution word whose depth-`n` projection is the ruler sequence
/// `g_n g_(n-1) g_n ... g_0 ... g_(n-1) g_n`.
pub fn nastyword(reg: &Registry) -> Result<WordExpr> {
    for n in 0..=reg.table.len() as u32 {
        reg.involution(n).map_err(|_| GalleryError::NoInvolution(n))?;
    }
    let rule = QRule::new(
        BTreeMap::new(),
        Some(TermRule::Involution { index: Affine::identity() }),
        BTreeMap::new(),
        Some(FiberTail { kind: FiberKind::Level, lo: Rational64::from_integer(0), hi: Rational64::from_integer(1), sign: SignRule::Plus }),
        BTreeMap::new(),
        None,
    )?;
    Ok(WordExpr::named("nasty", WordExpr::QShuffle(Arc::new(rule))))
}

/// `W_k`: the part of the word below the site `2^-k`, so that
/// `W_k = W_(k+1) g_k W_(k+1)`.
pub fn nasty_part(w: &WordExpr, k: u32) -> WordExpr {
    if k == 0 {
        return w.clone();
    }
    let site = Position(vec![Sel::Rat(Rational64::new(1, 1i64 << k))]);
    WordExpr::named(&format!("nasty_{k}"), WordExpr::sub(w.clone(), Interval { lo: Gap::start(), hi: Gap::before(&site) }))
}

/// `g_0 W_3 g_2 W_5 g_4 W_7 ...`
pub fn nasty_nonsymmetric(reg: &Registry, w: &WordExpr) -> Result<WordExpr> {
    let (treg, tw) = (reg.clone(), w.clone());
    let terms = LazyTerms::new(
        "nasty nonsymmetric",
        Affine::new(2, 0),
        Box::new(move |m| {
            let g = treg.involution(2 * m as u32)?;
            Ok(WordExpr::cat(vec![WordExpr::Lit(g), nasty_part(&tw, 2 * m as u32 + 3)]))
        }),
    );
    Ok(WordExpr::omega(OmegaRule::new(Vec::new(), TermRule::Lazy(terms))?))
}

/// Degrees of the depth-`n` ruler sequence: position `i` (from 1) carries
/// `n - v(i)` with `v` the 2-adic valuation.
pub fn ruler_degrees(n: u32) -> Vec<u32> {
    (1u64..1 << (n + 1)).map(|i| n - i.trailing_zeros()).collect()
}

/// The same sequence from `R_k = R_(k+1) k R_(k+1)`, `R_(n+1)` empty.
pub fn ruler_recursive(k: u32, n: u32) -> Vec<u32> {
    if k > n {
        return Vec::new();
    }
    let inner = ruler_recursive(k + 1, n);
    let mut out = inner.clone();
    out.push(k);
    out.extend(inner);
    out
}

pub fn shift_word(w: &WordExpr, k: u32) -> WordExpr {
    if k == 0 {
        return w.clone();
    }
    WordExpr::Shift(Arc::new(w.clone()), k)
}

/// Renames group indices by a finitely supported permutation.
pub fn reindex_word(w: &WordExpr, table: BTreeMap<u32, u32>) -> Result<WordExpr> {
    Ok(WordExpr::Relabel(Arc::new(w.clone()), Arc::new(Relabeling::new(table)?)))
}

/// The word over `reg.paired()` whose letter from `G_2n` or `G_2n+1` sits in
/// slot `n` as a one-syllable element.
pub fn pair_word(reg: &Registry, w: &WordExpr) -> WordExpr {
    WordExpr::Pair(Arc::new(w.clone()), Arc::new(reg.clone()))
}

/// Splits letters of paired slots back into letters of the original groups.
pub fn unpair_letters(w: &FiniteWord) -> Vec<Letter> {
    let mut out = Vec::new();
    for (_, l) in &w.0 {
        match &l.value {
            GroupElement::Free(syls) => {
                for (side, v) in syls {
                    let group = 2 * l.group + u32::from(*side == Side::R);
                    out.push(Letter { group, value: v.clone() });
                }
            }
            GroupElement::Int(_) => out.push(l.clone()),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSide {
    /// A new left word, matched by a constructed right word.
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub struct Goal {
    pub name: String,
    pub side: StepSide,
    pub word: WordExpr,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub registry: Registry,
    pub seed: Vec<(String, WordExpr)>,
    /// Worked first, in order; the remaining steps are diagonal steps.
    pub goals: Vec<Goal>,
    pub steps: usize,
    pub depth: u64,
}

#[derive(Debug, Clone)]
pub struct DriveOutcome {
    pub collection: CoiCollection,
    /// One JSON object per step.
    pub transcript: Vec<Value>,
}

impl DriveOutcome {
    pub fn transcript_jsonl(&self) -> String {
        self.transcript.iter().map(|v| format!("{v}\n")).collect()
    }
}

fn identity_triple(name: &str, w: &WordExpr) -> CoiTriple {
    CoiTriple { name: name.into(), left: w.clone(), map: CoiMap::Identity(CloseSubsetSpec::All), right: w.clone() }
}

/// Extends `coll` by a triple with left word `w`, picking the construction
/// by the shape of `w`.
fn extend_by_shape(reg: &Registry, coll: &CoiCollection, w: &WordExpr, depth: u64, name: &str, log: &mut Value) -> Result<CoiTriple> {
    let mut inner = w;
    while let WordExpr::Ref(_, x) = inner {
        inner = x;
    }
    let fine_witness = structural_witness(reg, w, &coll.left_words())?;
    match (inner, fine_witness) {
        (_, Some(wit)) => {
            log["construction"] = json!("representative");
            Ok(extend_representative(reg, coll, w, &wit, name)?)
        }
        (WordExpr::Omega(_), None) => {
            let ext = extend_omega(reg, coll, w, depth, name)?;
            log["construction"] = json!("omega");
            log["separators"] = json!(ext.separators.iter().map(|(k, r)| json!([k.to_string(), r])).collect::<Vec<_>>());
            log["body_degrees"] = json!(ext.body_degrees);
            log["zones"] = json!(ext.zones);
            log["avoidance"] = ext.cert.to_json();
            Ok(ext.triple)
        }
        (WordExpr::QShuffle(_), None) => {
            let ext = extend_qshuffle(reg, coll, w, depth, name)?;
            log["construction"] = json!("shuffle");
            log["separators"] = json!(ext.separators.iter().map(|(k, r)| json!([k.to_string(), r])).collect::<Vec<_>>());
            log["body_degrees"] = json!(ext.body_degrees);
            log["zones"] = json!(ext.zones);
            log["avoidance"] = ext.cert.to_json();
            Ok(ext.triple)
        }
        _ => Err(CoiError::NotApplicable(format!("no construction for {w}")).into()),
    }
}

/// Runs the scenario: goals first, then diagonal words outside `Fine` of
/// the current left words (even steps) or right words (odd steps). Every
/// step is followed by an audit of the whole collection.
pub fn drive_extension(sc: &Scenario) -> Result<DriveOutcome> {
    if sc.steps < sc.goals.len() {
        return Err(GalleryError::Budget { budget: sc.steps, goal: sc.goals.len() });
    }
    let reg = &sc.registry;
    let mut coll = CoiCollection::new();
    for (name, w) in &sc.seed {
        coll.push(identity_triple(name, w))?;
    }
    let mut transcript = Vec::new();
    for step in 0..sc.steps {
        let (name, side, word, diagonal) = match sc.goals.get(step) {
            Some(g) => (g.name.clone(), g.side, g.word.clone(), None),
            None => {
                let side = if step % 2 == 0 { StepSide::Left } else { StepSide::Right };
                let family = match side {
                    StepSide::Left => coll.left_words(),
                    StepSide::Right => coll.right_words(),
                };
                let d = diagonal_word(reg, &family, sc.depth)?;
                let name = format!("{}_{step}", sc.name);
                let word = WordExpr::named(&format!("{name}_v"), d.word.clone());
                (name, side, word, Some(d))
            }
        };
        let mut log = json!({
            "step": step,
            "name": name,
            "side": match side { StepSide::Left => "left", StepSide::Right => "right" },
            "word": word.to_string(),
        });
        if let Some(d) = &diagonal {
            log["diagonal"] = json!({"exponents": d.cert.exponents, "zones": d.zones, "depth": d.cert.depth});
        }
        let triple = match side {
            StepSide::Left => extend_by_shape(reg, &coll, &word, sc.depth, &name, &mut log)?,
            StepSide::Right => coi_invert(&extend_by_shape(reg, &coll.inverted(), &word, sc.depth, &name, &mut log)?),
        };
        coll.push(triple)?;
        let report = audit(reg, &coll, sc.depth)?;
        log["audit"] = json!({"depth": report.depth, "obligations": report.entries.len(), "equal": report.equal(), "unknown": report.unknown()});
        transcript.push(log);
    }
    Ok(DriveOutcome { collection: coll, transcript })
}
