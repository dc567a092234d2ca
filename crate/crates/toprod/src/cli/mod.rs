//! Command line front end: script parsing, command dispatch and JSON output.
//!
//! Every command reads a script, evaluates one request against it and prints
//! a single JSON document (or JSON lines for `drive`). Objects have sorted
//! keys, so identical invocations print identical bytes.

pub mod script;
pub mod sexp;

use crate::coi::{audit, check_coi, diagonal_word, CoiError};
use crate::gallery::{drive_extension, nastyword, GalleryError};
use crate::groups::{GroupElement, GroupError, GroupSpec, Letter, Registry, Side};
use crate::schemes::{check_reduced_depth, find_trivializing_scheme, ReducedVerdict, SchemeError};
use crate::words::{
    enumerate_degree_embeddings, equiv_depth, fine_membership_capped, free_reduce, project, reduce_letters, to_finite, Factor,
    FineVerdict, WordError, WordExpr, FACTOR_CAP,
};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use script::{parse, Assertion, Env, Script, Statement};
use serde_json::{json, Value};
use sexp::{Loc, Sexp};
use std::fmt::Display;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{loc}: syntax error: {msg}")]
    Syntax { loc: Loc, msg: String },
    #[error("{loc}: unknown form `{form}`")]
    UnknownForm { loc: Loc, form: String },
    #[error("{loc}: `{form}` expects {expected}")]
    Arity { loc: Loc, form: String, expected: String },
    #[error("{loc}: undefined name `{name}`")]
    Undefined { loc: Loc, name: String },
    #[error("{loc}: {msg}")]
    Invalid { loc: Loc, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Coi(#[from] CoiError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Gallery(#[from] GalleryError),
}

impl CliError {
    pub fn syntax(loc: Loc, msg: impl Into<String>) -> CliError {
        CliError::Syntax { loc, msg: msg.into() }
    }

    pub fn invalid(loc: Loc, msg: impl Display) -> CliError {
        CliError::Invalid { loc, msg: msg.to_string() }
    }

    pub fn arity(x: &Sexp, expected: &str) -> CliError {
        let form = x.head().unwrap_or("()").to_string();
        CliError::Arity { loc: x.loc(), form, expected: expected.into() }
    }

    /// The source location, for errors raised while reading a script.
    pub fn loc(&self) -> Option<Loc> {
        match self {
            CliError::Syntax { loc, .. }
            | CliError::UnknownForm { loc, .. }
            | CliError::Arity { loc, .. }
            | CliError::Undefined { loc, .. }
            | CliError::Invalid { loc, .. } => Some(*loc),
            _ => None,
        }
    }

    /// Fills in a location left blank by a nested reader.
    pub fn at(self, here: Loc) -> CliError {
        match self {
            CliError::Invalid { loc, msg } if loc == Loc::default() => CliError::Invalid { loc: here, msg },
            e => e,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "toprod", version, about = "Words of the topologist's product: projections, reduction schemes and extension steps")]
pub struct Cli {
    /// Projection depth for depth-qualified commands.
    #[arg(short = 'N', long = "depth", default_value_t = 6, global = true)]
    pub depth: u64,
    /// Emit JSON where a command also has a text form.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for randomized sweeps.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Work bound: drive steps, sweep size, or factors tried by `fine`.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Letters of degree at most N.
    Project { file: PathBuf, word: String },
    /// Free reduction of a finite word.
    Reduce { file: PathBuf, word: String },
    /// Equality of projections at depth N.
    Eq { file: PathBuf, a: String, b: String },
    /// Reducedness as far as depth N settles it.
    Reduced { file: PathBuf, word: String },
    /// A trivializing reduction scheme of a finite word.
    Scheme { file: PathBuf, word: String },
    /// Contiguous windows of TARGET whose degrees match PATTERN, both at depth N.
    Embeddings { file: PathBuf, pattern: String, target: String },
    /// Bounded search for a decomposition over a family.
    Fine {
        file: PathBuf,
        word: String,
        /// Family words; defaults to the left words of `--coll`, else every other defined word.
        family: Vec<String>,
        #[arg(long)]
        coll: Option<String>,
    },
    /// Coherence obligations of a collection at depth N.
    Audit { file: PathBuf, coll: Option<String> },
    /// Generated words.
    #[command(subcommand)]
    Build(Build),
    /// Runs a scenario and prints one JSON line per step.
    Drive { file: PathBuf, scenario: Option<String> },
    /// Evaluates every `assert` statement.
    Check { file: PathBuf },
    /// The script in canonical form.
    Print { file: PathBuf },
    /// Random finite words of length at most N: scheme search against free reduction.
    Sweep { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum Build {
    /// Script defining the involution word over Z/2 in every slot.
    Nastyword,
    /// A word outside the bounded span of a family.
    Diagonal {
        file: PathBuf,
        #[arg(long)]
        coll: Option<String>,
    },
}

/// What a command prints and the status it exits with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    /// 0 on success, 1 when the requested verdict fails.
    pub status: i32,
}

impl Outcome {
    fn json(v: Value, ok: bool) -> Outcome {
        Outcome { stdout: format!("{v}\n"), status: if ok { 0 } else { 1 } }
    }
}

pub fn load(path: &PathBuf) -> Result<(Script, Env), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    parse(&text)
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let n = cli.depth;
    match &cli.command {
        Command::Project { file, word } => {
            let (_, env) = load(file)?;
            let w = env.word_arg(word)?;
            Ok(Outcome::json(project(env.registry()?, &w, n)?.to_json(), true))
        }
        Command::Reduce { file, word } => {
            let (_, env) = load(file)?;
            let reg = env.registry()?;
            let f = free_reduce(reg, &to_finite(reg, &env.word_arg(word)?)?)?;
            Ok(Outcome::json(json!({"reduced": f.to_json(), "trivial": f.is_empty()}), true))
        }
        Command::Eq { file, a, b } => {
            let (_, env) = load(file)?;
            let same = equiv_depth(env.registry()?, &env.word_arg(a)?, &env.word_arg(b)?, n)?;
            Ok(Outcome::json(json!({"equal_to_depth": n, "result": same}), same))
        }
        Command::Reduced { file, word } => {
            let (_, env) = load(file)?;
            let v = check_reduced_depth(env.registry()?, &env.word_arg(word)?, n)?;
            let ok = !matches!(v, ReducedVerdict::NotReduced { .. });
            let mut out = serde_json::to_value(&v).expect("verdict serializes");
            out["checked_to_depth"] = json!(n);
            Ok(Outcome::json(out, ok))
        }
        Command::Scheme { file, word } => {
            let (_, env) = load(file)?;
            let reg = env.registry()?;
            let f = to_finite(reg, &env.word_arg(word)?)?;
            match find_trivializing_scheme(reg, &f.letters())? {
                Some(s) => Ok(Outcome::json(s.to_json(&f), true)),
                None => Ok(Outcome::json(Value::Null, false)),
            }
        }
        Command::Embeddings { file, pattern, target } => {
            let (_, env) = load(file)?;
            let reg = env.registry()?;
            let profile: Vec<u64> = project(reg, &env.word_arg(pattern)?, n)?.0.iter().map(|(_, l)| l.group as u64).collect();
            let target = project(reg, &env.word_arg(target)?, n)?;
            let found = enumerate_degree_embeddings(&profile, &target);
            let shown: Vec<Vec<String>> = found.iter().map(|e| e.iter().map(|&i| target.0[i].0.to_string()).collect()).collect();
            Ok(Outcome::json(json!({"depth": n, "profile": profile, "count": found.len(), "embeddings": shown}), true))
        }
        Command::Fine { file, word, family, coll } => {
            let (_, env) = load(file)?;
            let reg = env.registry()?;
            let w = env.word_arg(word)?;
            let family: Vec<WordExpr> = if !family.is_empty() {
                family.iter().map(|f| env.word_arg(f)).collect::<Result<_, _>>()?
            } else if let Some(c) = coll {
                env.collection(Some(c))?.left_words()
            } else {
                env.word_order.iter().filter(|x| *x != word).map(|x| env.words[x].clone()).collect()
            };
            let cap = cli.budget.unwrap_or(FACTOR_CAP);
            match fine_membership_capped(reg, &w, &family, n, cap)? {
                FineVerdict::MemberWitness(d) => {
                    let factors: Vec<Value> = d.factors.iter().map(|f| factor_json(&family, f)).collect();
                    Ok(Outcome::json(json!({"verdict": "member", "matched_to_depth": d.depth, "factors": factors}), true))
                }
                FineVerdict::NoDecompositionToDepth(k) => {
                    Ok(Outcome::json(json!({"verdict": "no_decomposition_to_depth", "depth": k, "factor_cap": cap}), false))
                }
            }
        }
        Command::Audit { file, coll } => {
            let (_, env) = load(file)?;
            let c = env.collection(coll.as_deref())?;
            let report = audit(env.registry()?, &c, n)?;
            Ok(Outcome::json(report.to_json(&c), true))
        }
        Command::Build(Build::Nastyword) => {
            let reg = Registry::uniform(GroupSpec::FiniteCyclic(2));
            let w = nastyword(&reg)?;
            let WordExpr::Ref(name, inner) = &w else { unreachable!("nastyword is named") };
            let text = format!("(registry (tail {}))\n(defword {name} {inner})\n", reg.tail);
            if cli.json {
                Ok(Outcome::json(json!({"script": text, "word": name.to_string(), "projection": project(&reg, &w, n)?.to_json()}), true))
            } else {
                Ok(Outcome { stdout: text, status: 0 })
            }
        }
        Command::Build(Build::Diagonal { file, coll }) => {
            let (_, env) = load(file)?;
            let family = match coll {
                Some(c) => env.collection(Some(c))?.left_words(),
                None => env.word_order.iter().map(|x| env.words[x].clone()).collect(),
            };
            let d = diagonal_word(env.registry()?, &family, n)?;
            Ok(Outcome::json(json!({"word": d.word.to_string(), "certificate": d.cert.to_json(), "zones": d.zones}), true))
        }
        Command::Drive { file, scenario } => {
            let (_, env) = load(file)?;
            let mut sc = env.scenario(scenario.as_deref())?;
            if let Some(b) = cli.budget {
                sc.steps = b;
            }
            let out = drive_extension(&sc)?;
            Ok(Outcome { stdout: out.transcript_jsonl(), status: 0 })
        }
        Command::Check { file } => {
            let (script, env) = load(file)?;
            let mut rows = Vec::new();
            let mut failed = 0;
            for st in &script.statements {
                let Statement::Assert(a) = st else { continue };
                let pass = check_assertion(&env, a)?;
                failed += usize::from(!pass);
                rows.push(json!({"form": a.to_string(), "pass": pass}));
            }
            Ok(Outcome::json(json!({"assertions": rows, "failed": failed}), failed == 0))
        }
        Command::Print { file } => {
            let (script, _) = load(file)?;
            Ok(Outcome { stdout: script.to_string(), status: 0 })
        }
        Command::Sweep { file } => {
            let (_, env) = load(file)?;
            let reg = env.registry()?;
            let seed = cli.seed.unwrap_or(0);
            let count = cli.budget.unwrap_or(1000);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut bad = Vec::new();
            for _ in 0..count {
                let w = random_word(reg, &mut rng, n as usize);
                let has_scheme = find_trivializing_scheme(reg, &w)?.is_some();
                if has_scheme != reduce_letters(reg, &w)?.is_empty() {
                    bad.push(w.iter().map(Letter::to_string).collect::<Vec<_>>().join(" "));
                }
            }
            let ok = bad.is_empty();
            Ok(Outcome::json(json!({"seed": seed, "words": count, "max_length": n, "discrepancies": bad}), ok))
        }
    }
}

fn factor_json(family: &[WordExpr], f: &Factor) -> Value {
    match f {
        Factor::Sub { index, interval, sign, span } => {
            json!({"word": family[*index].to_string(), "interval": interval.to_string(), "sign": sign, "span": span.to_string()})
        }
        Factor::Letter { letter, span } => json!({"letter": letter.to_string(), "span": span.to_string()}),
    }
}

fn check_assertion(env: &Env, a: &Assertion) -> Result<bool, CliError> {
    let reg = env.registry()?;
    Ok(match a {
        Assertion::Equiv(x, y, n) => equiv_depth(reg, x, y, *n)?,
        Assertion::Reduced(w, n) => matches!(check_reduced_depth(reg, w, *n)?, ReducedVerdict::CertifiedReduced { .. }),
        Assertion::Trivial(w) => free_reduce(reg, &to_finite(reg, w)?)?.is_empty(),
        Assertion::Coi(t, n) => check_coi(reg, &env.triples[t], *n).is_ok(),
        Assertion::Coherent(c, n) => audit(reg, &env.collection(Some(c))?, *n)?.unknown() == 0,
    })
}

fn random_element(spec: &GroupSpec, rng: &mut ChaCha8Rng) -> GroupElement {
    match spec {
        GroupSpec::InfiniteCyclic => {
            let v = rng.gen_range(1..=3);
            GroupElement::Int(if rng.gen() { v } else { -v })
        }
        GroupSpec::FiniteCyclic(k) => GroupElement::Int(rng.gen_range(1..*k as i64)),
        GroupSpec::FreeProduct(l, r) => {
            let side = if rng.gen() { Side::L } else { Side::R };
            let factor = if side == Side::L { l } else { r };
            GroupElement::Free(vec![(side, random_element(factor, rng))])
        }
    }
}

/// Letters from the first three groups, length uniform in `0..=max_len`.
fn random_word(reg: &Registry, rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Letter> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| {
            let group = rng.gen_range(0..3);
            Letter { group, value: random_element(reg.spec(group), rng) }
        })
        .collect()
}
