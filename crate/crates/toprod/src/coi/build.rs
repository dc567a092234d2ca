//! Constructions that extend a collection by one triple.

use super::{varpropto_coi, CoiCollection, CoiError, CoiMap, CoiTriple, Direction, Family, FamilyKeys, Result, Seg};
use crate::groups::{g_has_infinite_order, g_pow, g_power_exponent, Letter, Registry};
use crate::orders::{Count, Extremum, Gap, Interval, Position, Sel};
use crate::words::{
    count_in, d_word, enumerate_degree_embeddings, equiv_depth, extremum, fine_membership_bounded, first, is_finite_word,
    letter_at, project, same_letters, structural_witness, Affine, Decomposition, ExponentFn, Factor, FineVerdict, FiniteWord,
    LazyTerms, OmegaRule, QRule, TermRule, WordError, WordExpr,
};
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

fn peel(w: &WordExpr) -> &WordExpr {
    match w {
        WordExpr::Ref(_, x) => peel(x),
        _ => w,
    }
}

fn end_letter(reg: &Registry, w: &WordExpr, least: bool) -> Result<Option<Letter>> {
    Ok(match extremum(reg, w, &Interval::full(), least)? {
        Extremum::At(p) => letter_at(reg, w, &p)?,
        _ => None,
    })
}

/// A triple whose left word is `w`, built from an exact decomposition of `w`
/// over the collection's left words.
pub fn extend_representative(reg: &Registry, coll: &CoiCollection, w: &WordExpr, witness: &Decomposition, name: &str) -> Result<CoiTriple> {
    if witness.depth.is_some() {
        return Err(CoiError::NotApplicable("decomposition only matched to a bounded depth".into()));
    }
    let named = |u: WordExpr| WordExpr::named(&format!("{name}_u"), u);
    if matches!(first(reg, w, &Interval::full())?, Extremum::Empty) {
        return Ok(CoiTriple { name: name.into(), left: w.clone(), map: CoiMap::Empty, right: WordExpr::Empty });
    }
    let mut blocks = Vec::new();
    for f in &witness.factors {
        let Factor::Sub { index, interval, sign, span } = f else { continue };
        let t = coll.triples.get(*index).ok_or_else(|| CoiError::BadWitness(format!("factor index {index}")))?;
        if count_in(reg, &t.left, interval)?.is_finite() {
            continue;
        }
        blocks.push((span.lo.path.clone(), t, interval, *sign));
    }
    if blocks.is_empty() {
        if !is_finite_word(reg, w)? {
            return Err(CoiError::BadWitness("an infinite word needs an infinite factor".into()));
        }
        let Extremum::At(p) = first(reg, w, &Interval::full())? else { unreachable!("nonempty finite word") };
        let h = reg.fresh(0);
        return Ok(CoiTriple { name: name.into(), left: w.clone(), map: CoiMap::Point { src: p, dst: Position::root() }, right: named(WordExpr::Lit(h)) });
    }
    let mut parts: Vec<WordExpr> = Vec::new();
    let mut segs = Vec::new();
    let mut prev_last: Option<Letter> = None;
    for (prefix, t, iv, sign) in blocks {
        let j = varpropto_coi(reg, t, iv, Direction::Forward)?;
        let body = if same_letters(reg, &t.right, &j, &Interval::full())? { t.right.clone() } else { WordExpr::sub(t.right.clone(), j.clone()) };
        let body = WordExpr::power(body, sign);
        if let (Some(a), Some(b)) = (&prev_last, end_letter(reg, &body, true)?) {
            if a.group == b.group {
                parts.push(WordExpr::Lit(reg.fresh(a.group + 1)));
            }
        }
        prev_last = end_letter(reg, &body, false)?;
        segs.push(Seg {
            src_prefix: prefix,
            dst_prefix: vec![Sel::Part(parts.len() as u32)],
            flip: sign < 0,
            src_window: iv.clone(),
            dst_window: j,
            inner: Arc::new(t.clone()),
        });
        parts.push(body);
    }
    let right = if parts.len() == 1 {
        segs[0].dst_prefix.clear();
        parts.pop().expect("one part")
    } else {
        WordExpr::cat(parts)
    };
    Ok(CoiTriple { name: name.into(), left: w.clone(), map: CoiMap::Segs(segs), right: named(right) })
}

/// Replaces every maximal run of letters of degree at most `n + 2` in the
/// right word by one fresh letter of degree `n + 1`.
pub fn raise_triple(reg: &Registry, t: &CoiTriple, n: u64, name: &str) -> Result<CoiTriple> {
    let group = u32::try_from(n + 1).map_err(|_| WordError::Invalid(format!("degree {n} out of range")))?;
    let h = WordExpr::Lit(reg.fresh(group));
    let named = |u: WordExpr| WordExpr::named(&format!("{name}_u"), u);
    if is_finite_word(reg, &t.right)? {
        let map = match first(reg, &t.left, &Interval::full())? {
            Extremum::At(p) => CoiMap::Point { src: p, dst: Position::root() },
            _ => CoiMap::Empty,
        };
        return Ok(CoiTriple { name: name.into(), left: t.left.clone(), map, right: named(h) });
    }
    let low = project(reg, &t.right, n + 2)?;
    if low.is_empty() {
        return Ok(CoiTriple { name: name.into(), ..t.clone() });
    }
    let mut runs: Vec<(Position, Position)> = Vec::new();
    for (p, _) in &low.0 {
        if let Some((_, end)) = runs.last_mut() {
            if count_in(reg, &t.right, &Interval { lo: Gap::after(end), hi: Gap::before(p) })? == Count::Finite(0) {
                *end = p.clone();
                continue;
            }
        }
        runs.push((p.clone(), p.clone()));
    }
    let mut parts = Vec::new();
    let mut segs = Vec::new();
    let mut lo = Gap::start();
    for k in 0..=runs.len() {
        let hi = match runs.get(k) {
            Some((a, _)) => Gap::before(a),
            None => Gap::end(),
        };
        let region = Interval { lo: lo.clone(), hi };
        if !count_in(reg, &t.right, &region)?.is_zero() {
            let src = varpropto_coi(reg, t, &region, Direction::Backward)?;
            let dst = varpropto_coi(reg, t, &src, Direction::Forward)?;
            if !count_in(reg, &t.left, &src)?.is_zero() {
                segs.push(Seg {
                    src_prefix: Vec::new(),
                    dst_prefix: vec![Sel::Part(parts.len() as u32)],
                    flip: false,
                    src_window: src,
                    dst_window: dst,
                    inner: Arc::new(t.clone()),
                });
            }
            parts.push(WordExpr::sub(t.right.clone(), region));
        }
        if let Some((_, b)) = runs.get(k) {
            parts.push(h.clone());
            lo = Gap::after(b);
        }
    }
    Ok(CoiTriple { name: name.into(), left: t.left.clone(), map: CoiMap::Segs(segs), right: named(WordExpr::cat(parts)) })
}

/// [`raise_triple`] on a member of the collection; the result is named
/// `NAME_rN`.
pub fn raise_degree(reg: &Registry, coll: &CoiCollection, triple_name: &str, n: u64) -> Result<CoiTriple> {
    let t = coll.get(triple_name)?;
    raise_triple(reg, t, n, &format!("{triple_name}_r{n}"))
}

/// A letter of the word being built whose exponent is still free:
/// `base^(sign * q)` at index `index` of the degree profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub index: usize,
    pub base: Letter,
    pub sign: i8,
}

/// An embedding of the degree profile into a family word, and the slot at
/// which the chosen exponent rules it out.
#[derive(Debug, Clone, PartialEq)]
pub struct Defeat {
    pub word: usize,
    pub inverse: bool,
    pub embedding: Vec<usize>,
    pub slot: usize,
    pub found: Letter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AvoidCertificate {
    pub depth: u64,
    /// `q` per slot.
    pub exponents: Vec<i64>,
    /// Absolute exponents excluded per slot.
    pub forbidden: Vec<Vec<i64>>,
    pub defeats: Vec<Defeat>,
}

impl AvoidCertificate {
    pub fn to_json(&self) -> Value {
        json!({
            "depth": self.depth,
            "exponents": self.exponents,
            "forbidden": self.forbidden,
            "defeats": self.defeats.iter().map(|d| json!({
                "word": d.word,
                "inverse": d.inverse,
                "embedding": d.embedding,
                "slot": d.slot,
                "found": d.found.to_string(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Cap on the number of profile embeddings examined.
pub const EMBEDDING_BUDGET: usize = 1 << 16;

/// Largest exponent compared against a family letter.
const POWER_BOUND: i64 = 1 << 12;

/// Chooses for each slot the least `q >= 1` such that `base^(sign*q)` equals
/// no family letter of the slot's degree up to inversion, then records for
/// every embedding of `profile` into a depth-`depth` projection of a family
/// word (or its inverse) a slot where it fails.
pub fn avoid_exponents(reg: &Registry, family: &[WordExpr], profile: &[u64], slots: &[Slot], depth: u64) -> Result<AvoidCertificate> {
    let mut projections: Vec<FiniteWord> = Vec::new();
    for v in family {
        projections.push(project(reg, v, depth)?);
    }
    let mut exponents = Vec::new();
    let mut forbidden = Vec::new();
    for slot in slots {
        let spec = reg.spec(slot.base.group);
        if !g_has_infinite_order(spec, &slot.base.value) {
            return Err(CoiError::NotApplicable(format!("{} has finite order", slot.base)));
        }
        let mut bad = BTreeSet::new();
        for v in family {
            for (_, l) in project(reg, v, slot.base.group as u64)?.0 {
                if l.group == slot.base.group {
                    if let Some(e) = g_power_exponent(spec, &slot.base.value, &l.value, POWER_BOUND)? {
                        bad.insert(e.abs());
                    }
                }
            }
        }
        let q = (1..).find(|q| !bad.contains(q)).expect("finitely many exclusions");
        exponents.push(q);
        forbidden.push(bad.into_iter().collect());
    }
    let mut defeats = Vec::new();
    let mut seen = 0usize;
    for (word, proj) in projections.iter().enumerate() {
        for inverse in [false, true] {
            let target = if inverse {
                FiniteWord(proj.0.iter().rev().map(|(p, l)| (p.clone(), l.inverse(reg))).collect())
            } else {
                proj.clone()
            };
            for embedding in enumerate_degree_embeddings(profile, &target) {
                seen += 1;
                if seen > EMBEDDING_BUDGET {
                    return Err(CoiError::Budget("profile embeddings".into()));
                }
                // Prefer the slot the embedding itself constrained.
                let mut hit = None;
                let mut fallback = None;
                for (k, slot) in slots.iter().enumerate() {
                    let found = &target.0[embedding[slot.index]].1;
                    let spec = reg.spec(slot.base.group);
                    let want = g_pow(spec, &slot.base.value, slot.sign as i64 * exponents[k])?;
                    if found.value == want {
                        continue;
                    }
                    if g_power_exponent(spec, &slot.base.value, &found.value, POWER_BOUND)?.is_some() {
                        hit = Some((k, found.clone()));
                        break;
                    }
                    fallback = fallback.or_else(|| Some((k, found.clone())));
                }
                let hit = hit.or(fallback);
                let Some((slot, found)) = hit else {
                    return Err(CoiError::Invalid(format!("embedding into family word {word} survives every slot")));
                };
                defeats.push(Defeat { word, inverse, embedding, slot, found });
            }
        }
    }
    Ok(AvoidCertificate { depth, exponents, forbidden, defeats })
}

/// `z(n)`: the part of the partition of the naturals into infinite sets
/// `Z_0, Z_1, ...` that `n` lies in.
pub fn zone(n: u64) -> u64 {
    (n + 1).trailing_zeros() as u64
}

#[derive(Debug, Clone)]
pub struct Diagonal {
    pub word: WordExpr,
    pub cert: AvoidCertificate,
    /// `z(n)` for `n <= depth`.
    pub zones: Vec<u64>,
}

/// `h_0^q0 h_1^q1 ...` with `h_n` the canonical infinite-order letter of
/// `G_n`, the exponents up to `depth` chosen against the family and 1 after.
pub fn diagonal_word(reg: &Registry, family: &[WordExpr], depth: u64) -> Result<Diagonal> {
    let profile: Vec<u64> = (0..=depth).collect();
    let mut slots = Vec::new();
    for n in 0..=depth {
        let n32 = u32::try_from(n).map_err(|_| WordError::Invalid(format!("degree {n} out of range")))?;
        slots.push(Slot { index: n as usize, base: reg.infinite_order(n32)?, sign: 1 });
    }
    let cert = avoid_exponents(reg, family, &profile, &slots, depth)?;
    let at: BTreeMap<u64, i64> = cert.exponents.iter().enumerate().map(|(n, q)| (n as u64, *q)).collect();
    let rule = OmegaRule::new(Vec::new(), TermRule::Power { index: Affine::identity(), exp: ExponentFn { c: 0, d: 1, at } })?;
    Ok(Diagonal { word: WordExpr::omega(rule), cert, zones: (0..=depth).map(zone).collect() })
}

enum Source {
    Omega(Arc<OmegaRule>),
    Shuffle(Arc<QRule>),
}

/// The raised triple over each term or block, built on first use.
struct Pieces {
    reg: Registry,
    coll: CoiCollection,
    source: Source,
    name: String,
    /// Piece `m` is raised to degree above `m + lift`.
    lift: u64,
    memo: Mutex<HashMap<u64, Arc<CoiTriple>>>,
}

impl Pieces {
    fn get(&self, m: u64) -> Result<Arc<CoiTriple>> {
        if let Some(t) = self.memo.lock().expect("memo lock").get(&m) {
            return Ok(t.clone());
        }
        let w = match &self.source {
            Source::Omega(rule) => rule.tail.term(&self.reg, m)?,
            Source::Shuffle(rule) => rule.body(&self.reg, m)?,
        };
        // Single letters always decompose, through letter triples with empty maps.
        let witness = if is_finite_word(&self.reg, &w)? {
            Decomposition { factors: Vec::new(), depth: None }
        } else {
            structural_witness(&self.reg, &w, &self.coll.left_words())?
                .ok_or_else(|| CoiError::BadWitness(format!("piece {m} is not a product of collection subwords")))?
        };
        let rep = extend_representative(&self.reg, &self.coll, &w, &witness, &format!("{}.{m}", self.name))?;
        let raised = Arc::new(raise_triple(&self.reg, &rep, m + self.lift, &format!("{}.{m}", self.name))?);
        self.memo.lock().expect("memo lock").insert(m, raised.clone());
        Ok(raised)
    }
}

fn word_err(e: CoiError) -> WordError {
    match e {
        CoiError::Word(w) => w,
        other => WordError::Invalid(other.to_string()),
    }
}

#[derive(Debug, Clone)]
pub struct OmegaExtension {
    pub triple: CoiTriple,
    pub cert: AvoidCertificate,
    /// `d(U'_m)` for `m <= depth`.
    pub body_degrees: Vec<Option<u64>>,
    /// `(k_m, r_m)` for `m <= depth`.
    pub separators: Vec<(Letter, i64)>,
    pub zones: Vec<u64>,
}

fn fresh_infinite(reg: &Registry, m: u64) -> Result<Letter> {
    let n = u32::try_from(m).map_err(|_| WordError::Invalid(format!("degree {m} out of range")))?;
    Ok(reg.infinite_order(n)?)
}

/// Extends the collection to an omega concatenation `W_0 W_1 ...` of
/// collection products that is itself outside `Fine` to `depth`: the right
/// word is `U'_0 k_0^r0 U'_1 k_1^r1 ...` with `U'_m` the image of `W_m` raised
/// above degree `m + 1`.
pub fn extend_omega(reg: &Registry, coll: &CoiCollection, w: &WordExpr, depth: u64, name: &str) -> Result<OmegaExtension> {
    let WordExpr::Omega(rule) = peel(w) else { return Err(CoiError::NotApplicable("not an omega word".into())) };
    if !rule.prefix.is_empty() {
        return Err(CoiError::NotApplicable("omega word with a finite prefix".into()));
    }
    if let FineVerdict::MemberWitness(_) = fine_membership_bounded(reg, w, &coll.left_words(), depth)? {
        return Err(CoiError::NotApplicable("word already decomposes over the collection".into()));
    }
    let pieces = Arc::new(Pieces {
        reg: reg.clone(),
        coll: coll.clone(),
        source: Source::Omega(rule.clone()),
        name: name.to_string(),
        lift: 1,
        memo: Mutex::new(HashMap::new()),
    });
    let mut family = coll.right_words();
    let mut profile_word = Vec::new();
    let mut body_degrees = Vec::new();
    let mut bases = Vec::new();
    for m in 0..=depth {
        let p = pieces.get(m)?;
        family.push(p.right.clone());
        body_degrees.push(d_word(reg, &p.right)?);
        profile_word.push(p.right.clone());
        let k = fresh_infinite(reg, m)?;
        profile_word.push(WordExpr::Lit(k.clone()));
        bases.push(k);
    }
    // Slots sit where the separators land in the depth projection.
    let proj = project(reg, &WordExpr::cat(profile_word), depth)?;
    let profile: Vec<u64> = proj.0.iter().map(|(_, l)| l.group as u64).collect();
    let mut slots = Vec::new();
    for (i, (p, l)) in proj.0.iter().enumerate() {
        if p.0.len() == 1 && p.0[0] == Sel::Part(2 * l.group + 1) {
            slots.push(Slot { index: i, base: bases[l.group as usize].clone(), sign: 1 });
        }
    }
    let cert = avoid_exponents(reg, &family, &profile, &slots, depth)?;
    let exps: Vec<i64> = cert.exponents.clone();
    let maker = pieces.clone();
    let treg = reg.clone();
    let tail = LazyTerms::new(
        format!("separated omega {name}"),
        Affine::identity(),
        Box::new(move |m| {
            let p = maker.get(m).map_err(word_err)?;
            let k = fresh_infinite(&treg, m).map_err(word_err)?;
            let r = exps.get(m as usize).copied().unwrap_or(1);
            let value = g_pow(treg.spec(k.group), &k.value, r)?;
            Ok(WordExpr::cat(vec![p.right.clone(), WordExpr::Lit(Letter { group: k.group, value })]))
        }),
    );
    let right = WordExpr::named(&format!("{name}_u"), WordExpr::omega(OmegaRule::new(Vec::new(), TermRule::Lazy(tail))?));
    let fam_pieces = pieces.clone();
    let family_map = Family::new(
        format!("omega {name}"),
        FamilyKeys::Omega,
        Vec::new(),
        vec![Sel::Part(0)],
        Box::new(move |key| match key {
            Sel::Omega(m) => Ok(Some((fam_pieces.get(*m)?, false))),
            _ => Ok(None),
        }),
    );
    let separators = bases.into_iter().zip(cert.exponents.iter().copied()).collect();
    Ok(OmegaExtension {
        triple: CoiTriple { name: name.into(), left: w.clone(), map: CoiMap::Family(family_map), right },
        cert,
        body_degrees,
        separators,
        zones: (0..=depth).map(zone).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct ShuffleExtension {
    pub triple: CoiTriple,
    pub cert: AvoidCertificate,
    /// `(h_m, R_m)` for the levels `m <= depth`.
    pub separators: Vec<(Letter, i64)>,
    pub body_degrees: Vec<Option<u64>>,
    pub zones: Vec<u64>,
}

/// Extends the collection to a dense shuffle of collection products: the
/// block `B_m^A` at a site of level `m` and sign `A` becomes
/// `h_m^(A*R_m) (U'_m)^A h_m^(A*R_m)` with `U'_m` the image of `B_m` raised
/// above degree `m`.
pub fn extend_qshuffle(reg: &Registry, coll: &CoiCollection, w: &WordExpr, depth: u64, name: &str) -> Result<ShuffleExtension> {
    let WordExpr::QShuffle(rule) = peel(w) else { return Err(CoiError::NotApplicable("not a shuffle word".into())) };
    if reg.has_involutions() {
        return Err(CoiError::NotApplicable("the registry has involutions".into()));
    }
    let levels: Vec<u64> = (0..=depth).filter(|m| !rule.level_sites(*m, None, None).is_empty() || rule.fibers.contains_key(m)).collect();
    let mut bodies = Vec::new();
    for &m in &levels {
        let b = rule.body(reg, m)?;
        if matches!(first(reg, &b, &Interval::full())?, Extremum::Empty) {
            return Err(CoiError::NotApplicable(format!("block {m} is empty")));
        }
        bodies.push(b);
    }
    for i in 0..bodies.len() {
        for j in i + 1..bodies.len() {
            let (a, b) = (&bodies[i], &bodies[j]);
            if equiv_depth(reg, a, b, depth)? || equiv_depth(reg, a, &WordExpr::inv(b.clone()), depth)? {
                return Err(CoiError::NotApplicable(format!("blocks {} and {} coincide to depth {depth}", levels[i], levels[j])));
            }
        }
    }
    let pieces = Arc::new(Pieces {
        reg: reg.clone(),
        coll: coll.clone(),
        source: Source::Shuffle(rule.clone()),
        name: name.to_string(),
        lift: 0,
        memo: Mutex::new(HashMap::new()),
    });
    let mut family = coll.right_words();
    let mut body_degrees = Vec::new();
    let mut profile = Vec::new();
    let mut slots = Vec::new();
    let mut bases = Vec::new();
    for m in 0..=depth {
        let h = fresh_infinite(reg, m)?;
        if levels.contains(&m) {
            let p = pieces.get(m)?;
            family.push(p.right.clone());
            body_degrees.push(d_word(reg, &p.right)?);
        } else {
            body_degrees.push(None);
        }
        slots.push(Slot { index: profile.len(), base: h.clone(), sign: 1 });
        profile.push(m);
        bases.push(h);
    }
    let cert = avoid_exponents(reg, &family, &profile, &slots, depth)?;
    let seps: BTreeMap<u64, (Letter, i64)> = bases.iter().cloned().zip(cert.exponents.iter().copied()).enumerate().map(|(m, s)| (m as u64, s)).collect();
    let maker = pieces.clone();
    let block_tail = TermRule::Lazy(LazyTerms::new(
        format!("raised {name}"),
        Affine::new(1, 1),
        Box::new(move |m| Ok(maker.get(m).map_err(word_err)?.right.clone())),
    ));
    let new_rule = QRule::new(BTreeMap::new(), Some(block_tail), rule.fibers.clone(), rule.fiber_tail.clone(), seps, Some(ExponentFn::constant(1)))?;
    let right = WordExpr::named(&format!("{name}_u"), WordExpr::QShuffle(Arc::new(new_rule)));
    let fam_pieces = pieces.clone();
    let src_rule = rule.clone();
    let family_map = Family::new(
        format!("shuffle {name}"),
        FamilyKeys::Rat,
        vec![Sel::Part(1)],
        vec![Sel::Part(1)],
        Box::new(move |key| match key {
            Sel::Rat(s) => match src_rule.site(s) {
                Some((m, sign)) => Ok(Some((fam_pieces.get(m)?, sign < 0))),
                None => Ok(None),
            },
            _ => Ok(None),
        }),
    );
    let separators = bases.into_iter().zip(cert.exponents.iter().copied()).collect();
    Ok(ShuffleExtension {
        triple: CoiTriple { name: name.into(), left: w.clone(), map: CoiMap::Family(family_map), right },
        cert,
        separators,
        body_degrees,
        zones: (0..=depth).map(zone).collect(),
    })
}
