//! Scripts: typed statements read from s-expressions, and their printed form.

use super::sexp::{read_all, read_one, Loc, Sexp};
use super::CliError;
use crate::coi::{CoiCollection, CoiMap, CoiTriple, Seg};
use crate::gallery::{Goal, Scenario, StepSide};
use crate::groups::{GroupElement, GroupSpec, Letter, Registry, Side};
use crate::orders::{parse_rational, CloseSubsetSpec, DenseRule, Gap, Interval, Position, Sel};
use crate::words::{
    Affine, ExponentFn, FiberKind, FiberTail, OmegaRule, QRule, Relabeling, SignRule, TermRule, WordExpr,
};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub enum Assertion {
    /// Equal projections at one depth.
    Equiv(WordExpr, WordExpr, u64),
    Reduced(WordExpr, u64),
    /// A finite word that reduces to the empty word.
    Trivial(WordExpr),
    /// The named triple passes its own checks to a depth.
    Coi(String, u64),
    /// Every audit obligation of the collection comes out `Equal`.
    Coherent(String, u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDef {
    pub name: String,
    pub seed: Vec<String>,
    pub goals: Vec<(String, StepSide, WordExpr)>,
    pub steps: usize,
    pub depth: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    DefGroup(String, GroupSpec),
    Registry(Registry),
    DefWord(String, WordExpr),
    DefTriple(Arc<CoiTriple>),
    DefColl(String, Vec<String>),
    DefScenario(ScenarioDef),
    Assert(Assertion),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Script {
    pub statements: Vec<Statement>,
}

/// Names bound so far while reading a script.
#[derive(Debug, Clone, Default)]
pub struct Env {
    pub registry: Option<Registry>,
    pub groups: BTreeMap<String, GroupSpec>,
    pub words: BTreeMap<String, WordExpr>,
    pub word_order: Vec<String>,
    pub triples: BTreeMap<String, Arc<CoiTriple>>,
    pub triple_order: Vec<String>,
    pub colls: BTreeMap<String, Vec<String>>,
    pub scenarios: BTreeMap<String, ScenarioDef>,
}

impl Env {
    pub fn registry(&self) -> Result<&Registry, CliError> {
        self.registry.as_ref().ok_or_else(|| CliError::Usage("script declares no registry".into()))
    }

    pub fn word(&self, name: &str) -> Result<&WordExpr, CliError> {
        self.words.get(name).ok_or_else(|| CliError::Usage(format!("undefined name {name}")))
    }

    /// A word given on the command line: a defined name or an expression.
    pub fn word_arg(&self, text: &str) -> Result<WordExpr, CliError> {
        self.parse_word(&read_one(text)?)
    }

    pub fn collection(&self, name: Option<&str>) -> Result<CoiCollection, CliError> {
        let names = match name {
            Some(n) => self.colls.get(n).ok_or_else(|| CliError::Usage(format!("undefined name {n}")))?.clone(),
            None => self.triple_order.clone(),
        };
        let mut coll = CoiCollection::new();
        for n in names {
            coll.push(self.triples[&n].as_ref().clone())?;
        }
        Ok(coll)
    }

    pub fn scenario(&self, name: Option<&str>) -> Result<Scenario, CliError> {
        let def = match name {
            Some(n) => self.scenarios.get(n).ok_or_else(|| CliError::Usage(format!("undefined name {n}")))?,
            None => match self.scenarios.values().collect::<Vec<_>>().as_slice() {
                [one] => *one,
                _ => return Err(CliError::Usage("name the scenario to drive".into())),
            },
        };
        Ok(Scenario {
            name: def.name.clone(),
            registry: self.registry()?.clone(),
            seed: def.seed.iter().map(|n| (n.clone(), self.words[n].clone())).collect(),
            goals: def.goals.iter().map(|(n, s, w)| Goal { name: n.clone(), side: *s, word: w.clone() }).collect(),
            steps: def.steps,
            depth: def.depth,
        })
    }

    fn parse_statement(&mut self, x: &Sexp) -> Result<Statement, CliError> {
        let head = x.head().ok_or_else(|| CliError::syntax(x.loc(), "expected a statement form"))?;
        let args = x.form(head).expect("head present");
        let st = match head {
            "defgroup" => {
                let [name, spec] = arity::<2>(x, args, "a name and a group")?;
                Statement::DefGroup(self.fresh_name(name)?, self.parse_group(spec)?)
            }
            "registry" => {
                if self.registry.is_some() {
                    return Err(CliError::invalid(x.loc(), "a script has a single registry"));
                }
                Statement::Registry(self.parse_registry(x.loc(), args)?)
            }
            "defword" => {
                let [name, w] = arity::<2>(x, args, "a name and a word")?;
                Statement::DefWord(self.fresh_name(name)?, self.parse_word(w)?)
            }
            "deftriple" | "triple" => Statement::DefTriple(Arc::new(self.parse_triple(x, args)?)),
            "defcoll" => {
                let (name, members) = args.split_first().ok_or_else(|| CliError::arity(x, "a name and triples"))?;
                let members = members.iter().map(|m| self.triple_name(m)).collect::<Result<Vec<_>, _>>()?;
                Statement::DefColl(self.fresh_name(name)?, members)
            }
            "defscenario" => Statement::DefScenario(self.parse_scenario(x, args)?),
            "assert" => {
                let [form] = arity::<1>(x, args, "one assertion")?;
                Statement::Assert(self.parse_assertion(form)?)
            }
            other => return Err(CliError::UnknownForm { loc: x.loc(), form: other.into() }),
        };
        self.bind(&st);
        Ok(st)
    }

    fn bind(&mut self, st: &Statement) {
        match st {
            Statement::DefGroup(n, g) => {
                self.groups.insert(n.clone(), g.clone());
            }
            Statement::Registry(r) => self.registry = Some(r.clone()),
            Statement::DefWord(n, w) => {
                self.words.insert(n.clone(), WordExpr::named(n, w.clone()));
                self.word_order.push(n.clone());
            }
            Statement::DefTriple(t) => {
                self.triples.insert(t.name.to_string(), t.clone());
                self.triple_order.push(t.name.to_string());
            }
            Statement::DefColl(n, m) => {
                self.colls.insert(n.clone(), m.clone());
            }
            Statement::DefScenario(s) => {
                self.scenarios.insert(s.name.clone(), s.clone());
            }
            Statement::Assert(_) => {}
        }
    }

    fn fresh_name(&self, x: &Sexp) -> Result<String, CliError> {
        let name = x.atom().ok_or_else(|| CliError::syntax(x.loc(), "expected a name"))?;
        let taken = self.groups.contains_key(name)
            || self.words.contains_key(name)
            || self.triples.contains_key(name)
            || self.colls.contains_key(name)
            || self.scenarios.contains_key(name);
        if taken || is_reserved(name) {
            return Err(CliError::invalid(x.loc(), format!("name {name} is already in use")));
        }
        Ok(name.to_string())
    }

    fn triple_name(&self, x: &Sexp) -> Result<String, CliError> {
        let name = x.atom().ok_or_else(|| CliError::syntax(x.loc(), "expected a triple name"))?;
        if !self.triples.contains_key(name) {
            return Err(CliError::Undefined { loc: x.loc(), name: name.into() });
        }
        Ok(name.to_string())
    }

    pub fn parse_group(&self, x: &Sexp) -> Result<GroupSpec, CliError> {
        let spec = match x {
            Sexp::Atom(a, _) if a == "Z" => GroupSpec::InfiniteCyclic,
            Sexp::Atom(a, l) => self.groups.get(a).cloned().ok_or_else(|| CliError::Undefined { loc: *l, name: a.clone() })?,
            Sexp::List(..) => match x.head() {
                Some("group") => {
                    let [g] = arity::<1>(x, x.form("group").expect("head"), "a group")?;
                    self.parse_group(g)?
                }
                Some("zmod") => {
                    let [k] = arity::<1>(x, x.form("zmod").expect("head"), "a modulus")?;
                    GroupSpec::FiniteCyclic(number(k)?)
                }
                Some("free") => {
                    let [a, b] = arity::<2>(x, x.form("free").expect("head"), "two groups")?;
                    GroupSpec::FreeProduct(Box::new(self.parse_group(a)?), Box::new(self.parse_group(b)?))
                }
                _ => return Err(unknown(x)),
            },
        };
        spec.validate().map_err(|e| CliError::invalid(x.loc(), e))?;
        Ok(spec)
    }

    fn parse_registry(&self, loc: Loc, args: &[Sexp]) -> Result<Registry, CliError> {
        let mut table = Vec::new();
        let mut tail = GroupSpec::InfiniteCyclic;
        for entry in args {
            let Sexp::List(items, l) = entry else {
                return Err(CliError::syntax(entry.loc(), "expected (index group) or (tail group)"));
            };
            let [key, g] = arity::<2>(entry, items, "an index and a group")?;
            if key.atom() == Some("tail") {
                tail = self.parse_group(g)?;
                continue;
            }
            let n: usize = number(key)?;
            if n != table.len() {
                return Err(CliError::invalid(*l, format!("expected index {}", table.len())));
            }
            table.push(self.parse_group(g)?);
        }
        Registry::new(table, tail).map_err(|e| CliError::invalid(loc, e))
    }

    pub fn parse_element(&self, x: &Sexp) -> Result<GroupElement, CliError> {
        match x {
            Sexp::Atom(..) => Ok(GroupElement::Int(number(x)?)),
            Sexp::List(items, _) => match x.head() {
                Some("l") | Some("r") => Ok(GroupElement::Free(vec![self.syllable(x)?])),
                Some("*") => Ok(GroupElement::Free(items[1..].iter().map(|s| self.syllable(s)).collect::<Result<_, _>>()?)),
                _ => Err(unknown(x)),
            },
        }
    }

    fn syllable(&self, x: &Sexp) -> Result<(Side, GroupElement), CliError> {
        let side = match x.head() {
            Some("l") => Side::L,
            Some("r") => Side::R,
            _ => return Err(CliError::syntax(x.loc(), "expected (l elem) or (r elem)")),
        };
        let [e] = arity::<1>(x, x.form(x.head().expect("head")).expect("head"), "one element")?;
        Ok((side, self.parse_element(e)?))
    }

    pub fn parse_letter(&self, x: &Sexp) -> Result<Letter, CliError> {
        let args = x.form("lit").ok_or_else(|| CliError::syntax(x.loc(), "expected (lit N elem)"))?;
        let [n, e] = arity::<2>(x, args, "a group index and an element")?;
        let reg = self.registry.as_ref().ok_or_else(|| CliError::invalid(x.loc(), "letters need a registry declared first"))?;
        Letter::new(reg, number(n)?, self.parse_element(e)?).map_err(|err| CliError::invalid(x.loc(), err))
    }

    pub fn parse_word(&self, x: &Sexp) -> Result<WordExpr, CliError> {
        let bad = |e: crate::words::WordError| CliError::invalid(x.loc(), e);
        let Sexp::List(items, _) = x else {
            let a = x.atom().expect("atom");
            if a == "E" {
                return Ok(WordExpr::Empty);
            }
            return self.words.get(a).cloned().ok_or_else(|| CliError::Undefined { loc: x.loc(), name: a.into() });
        };
        let head = x.head().ok_or_else(|| unknown(x))?;
        let args = &items[1..];
        let w = match head {
            "word" => {
                let [w] = arity::<1>(x, args, "a word")?;
                self.parse_word(w)?
            }
            "lit" => WordExpr::Lit(self.parse_letter(x)?),
            "cat" => WordExpr::cat(args.iter().map(|a| self.parse_word(a)).collect::<Result<_, _>>()?),
            "inv" => {
                let [w] = arity::<1>(x, args, "a word")?;
                WordExpr::Inv(Arc::new(self.parse_word(w)?))
            }
            "shift" => {
                let [w, k] = arity::<2>(x, args, "a word and a shift")?;
                WordExpr::Shift(Arc::new(self.parse_word(w)?), number(k)?)
            }
            "relabel" => {
                let (w, pairs) = args.split_first().ok_or_else(|| CliError::arity(x, "a word and index pairs"))?;
                let mut map = BTreeMap::new();
                for p in pairs {
                    let Sexp::List(ab, _) = p else { return Err(CliError::syntax(p.loc(), "expected (from to)")) };
                    let [a, b] = arity::<2>(p, ab, "two indices")?;
                    map.insert(number(a)?, number(b)?);
                }
                WordExpr::Relabel(Arc::new(self.parse_word(w)?), Arc::new(Relabeling::new(map).map_err(bad)?))
            }
            "pair" => {
                let [w] = arity::<1>(x, args, "a word")?;
                let reg = self.registry.as_ref().ok_or_else(|| CliError::invalid(x.loc(), "pair needs a registry"))?;
                WordExpr::Pair(Arc::new(self.parse_word(w)?), Arc::new(reg.clone()))
            }
            "sub" => {
                let [w, iv] = arity::<2>(x, args, "a word and an interval")?;
                WordExpr::Sub(Arc::new(self.parse_word(w)?), parse_interval(iv)?)
            }
            "omega" => WordExpr::omega(self.parse_omega(x, args)?),
            "qshuffle" => WordExpr::QShuffle(Arc::new(self.parse_shuffle(args).map_err(|e| e.at(x.loc()))?)),
            _ => return Err(unknown(x)),
        };
        Ok(w)
    }

    fn parse_omega(&self, x: &Sexp, args: &[Sexp]) -> Result<OmegaRule, CliError> {
        let [prefix, tail] = arity::<2>(x, args, "(prefix ...) and (tail ...)")?;
        let prefix = prefix.form("prefix").ok_or_else(|| CliError::syntax(prefix.loc(), "expected (prefix word...)"))?;
        let tail_args = tail.form("tail").ok_or_else(|| CliError::syntax(tail.loc(), "expected (tail rule)"))?;
        let [rule] = arity::<1>(tail, tail_args, "one term rule")?;
        let prefix = prefix.iter().map(|w| self.parse_word(w)).collect::<Result<_, _>>()?;
        OmegaRule::new(prefix, self.parse_rule(rule)?).map_err(|e| CliError::invalid(x.loc(), e))
    }

    fn parse_rule(&self, x: &Sexp) -> Result<TermRule, CliError> {
        let head = x.head().ok_or_else(|| unknown(x))?;
        let args = x.form(head).expect("head");
        match head {
            "power" => {
                let [index, exp] = arity::<2>(x, args, "(index ...) and (exp ...)")?;
                Ok(TermRule::Power { index: parse_index(index)?, exp: parse_exponent(exp)? })
            }
            "involution" => {
                let [index] = arity::<1>(x, args, "(index ...)")?;
                Ok(TermRule::Involution { index: parse_index(index)? })
            }
            "shifted" => {
                let [w, index] = arity::<2>(x, args, "a word and (index ...)")?;
                Ok(TermRule::Shifted { base: self.parse_word(w)?, index: parse_index(index)? })
            }
            "suffix" => {
                let [w, index] = arity::<2>(x, args, "an omega word and (index ...)")?;
                let mut base = self.parse_word(w)?;
                while let WordExpr::Ref(_, inner) = base {
                    base = inner.as_ref().clone();
                }
                let WordExpr::Omega(rule) = base else { return Err(CliError::invalid(w.loc(), "suffix needs an omega word")) };
                Ok(TermRule::Suffix { base: rule, from: parse_index(index)? })
            }
            "seq" => Ok(TermRule::Seq(args.iter().map(|r| self.parse_rule(r)).collect::<Result<_, _>>()?)),
            "lazy" => Err(CliError::invalid(x.loc(), "lazily generated terms have no text form")),
            _ => Err(unknown(x)),
        }
    }

    fn parse_shuffle(&self, args: &[Sexp]) -> Result<QRule, CliError> {
        let (mut blocks, mut fibers, mut seps) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
        let (mut block_tail, mut fiber_tail, mut sep_tail) = (None, None, None);
        for a in args {
            let head = a.head().ok_or_else(|| unknown(a))?;
            let xs = a.form(head).expect("head");
            match head {
                "block" => {
                    let [m, w] = arity::<2>(a, xs, "a level and a word")?;
                    blocks.insert(number(m)?, self.parse_word(w)?);
                }
                "blocktail" => {
                    let [r] = arity::<1>(a, xs, "a term rule")?;
                    block_tail = Some(self.parse_rule(r)?);
                }
                "fiber" => {
                    let [m, sites] = arity::<2>(a, xs, "a level and a site list")?;
                    let Sexp::List(sites, _) = sites else { return Err(CliError::syntax(sites.loc(), "expected ((p/q sign)...)")) };
                    let mut out = Vec::new();
                    for s in sites {
                        let Sexp::List(qs, _) = s else { return Err(CliError::syntax(s.loc(), "expected (p/q sign)")) };
                        let [q, sign] = arity::<2>(s, qs, "a rational and a sign")?;
                        out.push((rational(q)?, sign_of(sign)?));
                    }
                    fibers.insert(number(m)?, out);
                }
                "fibertail" => {
                    let [kind, lo, hi, sign] = arity::<4>(a, xs, "kind, bounds and sign rule")?;
                    let kind = match kind.atom() {
                        Some("level") => FiberKind::Level,
                        Some("enum") => FiberKind::Enum,
                        _ => return Err(unknown(kind)),
                    };
                    let sign = match sign.atom() {
                        Some("plus") => SignRule::Plus,
                        Some("minus") => SignRule::Minus,
                        Some("alternate") => SignRule::Alternate,
                        _ => return Err(unknown(sign)),
                    };
                    fiber_tail = Some(FiberTail { kind, lo: rational(lo)?, hi: rational(hi)?, sign });
                }
                "sep" => {
                    let [m, h, r] = arity::<3>(a, xs, "a level, a letter and an exponent")?;
                    seps.insert(number(m)?, (self.parse_letter(h)?, number(r)?));
                }
                "septail" => {
                    let [e] = arity::<1>(a, xs, "(exp ...)")?;
                    sep_tail = Some(parse_exponent(e)?);
                }
                _ => return Err(unknown(a)),
            }
        }
        QRule::new(blocks, block_tail, fibers, fiber_tail, seps, sep_tail).map_err(|e| CliError::invalid(Loc::default(), e))
    }

    fn parse_triple(&self, x: &Sexp, args: &[Sexp]) -> Result<CoiTriple, CliError> {
        let [name, left, right, coi] = arity::<4>(x, args, "a name, (left w), (right w) and (coi ...)")?;
        let name = self.fresh_name(name)?;
        let side = |s: &Sexp, tag: &str| -> Result<WordExpr, CliError> {
            let xs = s.form(tag).ok_or_else(|| CliError::syntax(s.loc(), format!("expected ({tag} word)")))?;
            let [w] = arity::<1>(s, xs, "a word")?;
            self.parse_word(w)
        };
        let (left, right) = (side(left, "left")?, side(right, "right")?);
        let parts = coi.form("coi").ok_or_else(|| CliError::syntax(coi.loc(), "expected (coi ...)"))?;
        let map = match parts {
            [] => CoiMap::Empty,
            [e] if e.atom() == Some("empty") => CoiMap::Empty,
            [id] if id.head() == Some("identity") => {
                let [s] = arity::<1>(id, id.form("identity").expect("head"), "a subset")?;
                CoiMap::Identity(parse_subset(s)?)
            }
            [p] if p.head() == Some("point") => {
                let [a, b] = arity::<2>(p, p.form("point").expect("head"), "two positions")?;
                CoiMap::Point { src: position(a)?, dst: position(b)? }
            }
            segs => CoiMap::Segs(segs.iter().map(|s| self.parse_seg(s)).collect::<Result<_, _>>()?),
        };
        Ok(CoiTriple { name: name.into(), left, map, right })
    }

    fn parse_seg(&self, x: &Sexp) -> Result<Seg, CliError> {
        let args = x.form("seg").ok_or_else(|| unknown(x))?;
        let [at, orient, src, dst, inner] = arity::<5>(x, args, "(at P Q), (orient s), (src I), (dst I) and (inner T)")?;
        let field = |s: &Sexp, tag: &str, n: usize| -> Result<Vec<Sexp>, CliError> {
            let xs = s.form(tag).ok_or_else(|| CliError::syntax(s.loc(), format!("expected ({tag} ...)")))?;
            if xs.len() != n {
                return Err(CliError::arity(s, &format!("{n} arguments")));
            }
            Ok(xs.to_vec())
        };
        let at = field(at, "at", 2)?;
        let flip = match sign_of(&field(orient, "orient", 1)?[0])? {
            1 => false,
            _ => true,
        };
        let inner_name = self.triple_name(&field(inner, "inner", 1)?[0])?;
        Ok(Seg {
            src_prefix: position(&at[0])?.0,
            dst_prefix: position(&at[1])?.0,
            flip,
            src_window: parse_interval(&field(src, "src", 1)?[0])?,
            dst_window: parse_interval(&field(dst, "dst", 1)?[0])?,
            inner: self.triples[&inner_name].clone(),
        })
    }

    fn parse_scenario(&self, x: &Sexp, args: &[Sexp]) -> Result<ScenarioDef, CliError> {
        let (name, rest) = args.split_first().ok_or_else(|| CliError::arity(x, "a name and clauses"))?;
        let mut def = ScenarioDef { name: self.fresh_name(name)?, seed: Vec::new(), goals: Vec::new(), steps: 0, depth: 6 };
        for c in rest {
            let head = c.head().ok_or_else(|| unknown(c))?;
            let xs = c.form(head).expect("head");
            match head {
                "seed" => {
                    for w in xs {
                        let n = w.atom().ok_or_else(|| CliError::syntax(w.loc(), "expected a word name"))?;
                        self.words.get(n).ok_or_else(|| CliError::Undefined { loc: w.loc(), name: n.into() })?;
                        def.seed.push(n.to_string());
                    }
                }
                "goal" => {
                    let [g, side, w] = arity::<3>(c, xs, "a name, a side and a word")?;
                    let side = match side.atom() {
                        Some("left") => StepSide::Left,
                        Some("right") => StepSide::Right,
                        _ => return Err(CliError::syntax(side.loc(), "expected left or right")),
                    };
                    let g = g.atom().ok_or_else(|| CliError::syntax(g.loc(), "expected a goal name"))?;
                    def.goals.push((g.to_string(), side, self.parse_word(w)?));
                }
                "steps" => def.steps = number(&arity::<1>(c, xs, "a count")?[0])?,
                "depth" => def.depth = number(&arity::<1>(c, xs, "a depth")?[0])?,
                _ => return Err(unknown(c)),
            }
        }
        Ok(def)
    }

    fn parse_assertion(&self, x: &Sexp) -> Result<Assertion, CliError> {
        let head = x.head().ok_or_else(|| unknown(x))?;
        let args = x.form(head).expect("head");
        let name = |s: &Sexp, table: bool| -> Result<String, CliError> {
            let n = s.atom().ok_or_else(|| CliError::syntax(s.loc(), "expected a name"))?;
            let known = if table { self.triples.contains_key(n) } else { self.colls.contains_key(n) };
            if !known {
                return Err(CliError::Undefined { loc: s.loc(), name: n.into() });
            }
            Ok(n.to_string())
        };
        Ok(match head {
            "equiv" => {
                let [a, b, n] = arity::<3>(x, args, "two words and a depth")?;
                Assertion::Equiv(self.parse_word(a)?, self.parse_word(b)?, number(n)?)
            }
            "reduced" => {
                let [w, n] = arity::<2>(x, args, "a word and a depth")?;
                Assertion::Reduced(self.parse_word(w)?, number(n)?)
            }
            "trivial" => Assertion::Trivial(self.parse_word(&arity::<1>(x, args, "a word")?[0])?),
            "coi" => {
                let [t, n] = arity::<2>(x, args, "a triple and a depth")?;
                Assertion::Coi(name(t, true)?, number(n)?)
            }
            "coherent" => {
                let [c, n] = arity::<2>(x, args, "a collection and a depth")?;
                Assertion::Coherent(name(c, false)?, number(n)?)
            }
            _ => return Err(unknown(x)),
        })
    }
}

fn is_reserved(name: &str) -> bool {
    matches!(name, "E" | "Z" | "all" | "empty" | "left" | "right" | "-inf" | "+inf") || name.parse::<i64>().is_ok()
}

fn unknown(x: &Sexp) -> CliError {
    let form = x.head().or(x.atom()).unwrap_or("()").to_string();
    CliError::UnknownForm { loc: x.loc(), form }
}

fn arity<'a, const K: usize>(x: &Sexp, args: &'a [Sexp], expected: &str) -> Result<&'a [Sexp; K], CliError> {
    args.try_into().map_err(|_| CliError::arity(x, expected))
}

fn number<T: std::str::FromStr>(x: &Sexp) -> Result<T, CliError> {
    x.atom().and_then(|a| a.parse().ok()).ok_or_else(|| CliError::syntax(x.loc(), format!("expected a number, found {x}")))
}

fn rational(x: &Sexp) -> Result<num_rational::Rational64, CliError> {
    x.atom().and_then(parse_rational).ok_or_else(|| CliError::syntax(x.loc(), format!("expected p/q, found {x}")))
}

fn sign_of(x: &Sexp) -> Result<i8, CliError> {
    match x.atom() {
        Some("1") | Some("+1") => Ok(1),
        Some("-1") => Ok(-1),
        _ => Err(CliError::syntax(x.loc(), "expected 1 or -1")),
    }
}

fn position(x: &Sexp) -> Result<Position, CliError> {
    let a = x.atom().ok_or_else(|| CliError::syntax(x.loc(), "expected a position"))?;
    a.parse().map_err(|e| CliError::invalid(x.loc(), e))
}

fn parse_index(x: &Sexp) -> Result<Affine, CliError> {
    let args = x.form("index").ok_or_else(|| CliError::syntax(x.loc(), "expected (index affine A B)"))?;
    let [tag, a, b] = arity::<3>(x, args, "affine A B")?;
    if tag.atom() != Some("affine") {
        return Err(unknown(tag));
    }
    Ok(Affine::new(number(a)?, number(b)?))
}

fn parse_exponent(x: &Sexp) -> Result<ExponentFn, CliError> {
    let args = x.form("exp").ok_or_else(|| CliError::syntax(x.loc(), "expected (exp (default affine C D) (at M V)...)"))?;
    let (default, overrides) = args.split_first().ok_or_else(|| CliError::arity(x, "(default affine C D)"))?;
    let d = default.form("default").ok_or_else(|| CliError::syntax(default.loc(), "expected (default affine C D)"))?;
    let [tag, c, dd] = arity::<3>(default, d, "affine C D")?;
    if tag.atom() != Some("affine") {
        return Err(unknown(tag));
    }
    let mut at = BTreeMap::new();
    for o in overrides {
        let xs = o.form("at").ok_or_else(|| CliError::syntax(o.loc(), "expected (at M V)"))?;
        let [m, v] = arity::<2>(o, xs, "an index and a value")?;
        at.insert(number(m)?, number(v)?);
    }
    Ok(ExponentFn { c: number(c)?, d: number(dd)?, at })
}

pub fn parse_interval(x: &Sexp) -> Result<Interval, CliError> {
    let args = x.form("interval").ok_or_else(|| CliError::syntax(x.loc(), "expected (interval LO HI)"))?;
    let [lo, hi] = arity::<2>(x, args, "two bounds")?;
    let bound = |b: &Sexp, lower: bool| -> Result<Gap, CliError> {
        match (b.atom(), lower) {
            (Some("-inf"), true) => return Ok(Gap::start()),
            (Some("+inf"), false) => return Ok(Gap::end()),
            _ => {}
        }
        let head = b.head().ok_or_else(|| CliError::syntax(b.loc(), "expected a bound"))?;
        let [p] = arity::<1>(b, b.form(head).expect("head"), "a position")?;
        let p = position(p)?;
        match (head, lower) {
            (">=", true) | ("<", false) => Ok(Gap::before(&p)),
            (">", true) | ("<=", false) => Ok(Gap::after(&p)),
            _ => Err(unknown(b)),
        }
    };
    Ok(Interval { lo: bound(lo, true)?, hi: bound(hi, false)? })
}

pub fn parse_subset(x: &Sexp) -> Result<CloseSubsetSpec, CliError> {
    if x.atom() == Some("all") {
        return Ok(CloseSubsetSpec::All);
    }
    let head = x.head().ok_or_else(|| unknown(x))?;
    let args = x.form(head).expect("head");
    let positions = || args.iter().map(position).collect::<Result<Vec<_>, _>>();
    Ok(match head {
        "finite" => CloseSubsetSpec::Finite(positions()?),
        "cofinite-except" => CloseSubsetSpec::CofiniteExcept(positions()?),
        "residue" => {
            let [m, r] = arity::<2>(x, args, "a modulus and a residue")?;
            CloseSubsetSpec::ResidueClass { modulus: number(m)?, residue: number(r)? }
        }
        "per-part" => CloseSubsetSpec::PerPart(args.iter().map(parse_subset).collect::<Result<_, _>>()?),
        "dense" => {
            let [r] = arity::<1>(x, args, "a rule")?;
            CloseSubsetSpec::Dense(match r.atom() {
                Some("all") => DenseRule::All,
                Some("dyadic") => DenseRule::Dyadic,
                _ => {
                    let k = r.form("denom-at-most").ok_or_else(|| unknown(r))?;
                    DenseRule::DenominatorAtMost(number(&arity::<1>(r, k, "a bound")?[0])?)
                }
            })
        }
        _ => return Err(unknown(x)),
    })
}

/// Reads a whole script, resolving names in order.
pub fn parse(text: &str) -> Result<(Script, Env), CliError> {
    let mut env = Env::default();
    let mut script = Script::default();
    for x in read_all(text)? {
        script.statements.push(env.parse_statement(&x)?);
    }
    Ok((script, env))
}

fn fmt_registry(r: &Registry) -> String {
    let mut s = "(registry".to_string();
    for (i, g) in r.table.iter().enumerate() {
        s.push_str(&format!(" ({i} {g})"));
    }
    s.push_str(&format!(" (tail {}))", r.tail));
    s
}

fn fmt_position(p: &[Sel]) -> String {
    Position(p.to_vec()).to_string()
}

pub fn fmt_map(m: &CoiMap) -> String {
    match m {
        CoiMap::Empty => "(coi empty)".into(),
        CoiMap::Identity(s) => format!("(coi (identity {s}))"),
        CoiMap::Point { src, dst } => format!("(coi (point {src} {dst}))"),
        CoiMap::Segs(segs) => {
            let mut s = "(coi".to_string();
            for g in segs {
                s.push_str(&format!(
                    " (seg (at {} {}) (orient {}) (src {}) (dst {}) (inner {}))",
                    fmt_position(&g.src_prefix),
                    fmt_position(&g.dst_prefix),
                    if g.flip { -1 } else { 1 },
                    g.src_window,
                    g.dst_window,
                    g.inner.name
                ));
            }
            s.push(')');
            s
        }
        CoiMap::Family(f) => format!("(coi (family {:?}))", f.label()),
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::Equiv(a, b, n) => write!(f, "(equiv {a} {b} {n})"),
            Assertion::Reduced(w, n) => write!(f, "(reduced {w} {n})"),
            Assertion::Trivial(w) => write!(f, "(trivial {w})"),
            Assertion::Coi(t, n) => write!(f, "(coi {t} {n})"),
            Assertion::Coherent(c, n) => write!(f, "(coherent {c} {n})"),
        }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::DefGroup(n, g) => write!(f, "(defgroup {n} {g})"),
            Statement::Registry(r) => write!(f, "{}", fmt_registry(r)),
            Statement::DefWord(n, w) => write!(f, "(defword {n} {w})"),
            Statement::DefTriple(t) => write!(f, "(deftriple {} (left {}) (right {}) {})", t.name, t.left, t.right, fmt_map(&t.map)),
            Statement::DefColl(n, m) => write!(f, "(defcoll {n} {})", m.join(" ")),
            Statement::DefScenario(s) => {
                write!(f, "(defscenario {} (seed {})", s.name, s.seed.join(" "))?;
                for (g, side, w) in &s.goals {
                    let side = if *side == StepSide::Left { "left" } else { "right" };
                    write!(f, " (goal {g} {side} {w})")?;
                }
                write!(f, " (steps {}) (depth {}))", s.steps, s.depth)
            }
            Statement::Assert(a) => write!(f, "(assert {a})"),
        }
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.statements {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}
