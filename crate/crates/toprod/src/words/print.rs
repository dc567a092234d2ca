//! S-expression rendering of word expressions.

use super::{ExponentFn, FiberKind, OmegaRule, QRule, SignRule, TermRule, WordExpr};
use num_rational::Rational64;
use std::fmt;

fn rat(q: &Rational64) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

fn exponent(e: &ExponentFn) -> String {
    let mut s = format!("(exp (default affine {} {})", e.c, e.d);
    for (m, v) in &e.at {
        s.push_str(&format!(" (at {m} {v})"));
    }
    s.push(')');
    s
}

impl fmt::Display for TermRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermRule::Power { index, exp } => write!(f, "(power (index affine {} {}) {})", index.a, index.b, exponent(exp)),
            TermRule::Involution { index } => write!(f, "(involution (index affine {} {}))", index.a, index.b),
            TermRule::Shifted { base, index } => write!(f, "(shifted {base} (index affine {} {}))", index.a, index.b),
            TermRule::Suffix { base, from } => {
                write!(f, "(suffix {} (index affine {} {}))", WordExpr::Omega(base.clone()), from.a, from.b)
            }
            TermRule::Seq(rules) => {
                write!(f, "(seq")?;
                for r in rules {
                    write!(f, " {r}")?;
                }
                write!(f, ")")
            }
            TermRule::Lazy(l) => write!(f, "(lazy {:?})", l.label),
        }
    }
}

fn omega(f: &mut fmt::Formatter<'_>, rule: &OmegaRule) -> fmt::Result {
    write!(f, "(omega (prefix")?;
    for p in &rule.prefix {
        write!(f, " {p}")?;
    }
    write!(f, ") (tail {}))", rule.tail)
}

fn shuffle(f: &mut fmt::Formatter<'_>, rule: &QRule) -> fmt::Result {
    write!(f, "(qshuffle")?;
    for (m, b) in &rule.blocks {
        write!(f, " (block {m} {b})")?;
    }
    if let Some(t) = &rule.block_tail {
        write!(f, " (blocktail {t})")?;
    }
    for (m, sites) in &rule.fibers {
        write!(f, " (fiber {m} (")?;
        for (k, (s, sign)) in sites.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "({} {sign})", rat(s))?;
        }
        write!(f, "))")?;
    }
    if let Some(t) = &rule.fiber_tail {
        let kind = match t.kind {
            FiberKind::Level => "level",
            FiberKind::Enum => "enum",
        };
        let sign = match t.sign {
            SignRule::Plus => "plus",
            SignRule::Minus => "minus",
            SignRule::Alternate => "alternate",
        };
        write!(f, " (fibertail {kind} {} {} {sign})", rat(&t.lo), rat(&t.hi))?;
    }
    for (m, (h, r)) in &rule.seps {
        write!(f, " (sep {m} {h} {r})")?;
    }
    if let Some(t) = &rule.sep_tail {
        write!(f, " (septail {})", exponent(t))?;
    }
    write!(f, ")")
}

impl fmt::Display for WordExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordExpr::Empty => write!(f, "E"),
            WordExpr::Lit(l) => write!(f, "{l}"),
            WordExpr::Cat(parts) => {
                write!(f, "(cat")?;
                for p in parts.iter() {
                    write!(f, " {p}")?;
                }
                write!(f, ")")
            }
            WordExpr::Inv(x) => write!(f, "(inv {x})"),
            WordExpr::Omega(rule) => omega(f, rule),
            WordExpr::QShuffle(rule) => shuffle(f, rule),
            WordExpr::Shift(x, k) => write!(f, "(shift {x} {k})"),
            WordExpr::Relabel(x, r) => {
                write!(f, "(relabel {x}")?;
                for (a, b) in &r.map {
                    write!(f, " ({a} {b})")?;
                }
                write!(f, ")")
            }
            WordExpr::Pair(x, _) => write!(f, "(pair {x})"),
            WordExpr::Sub(x, iv) => write!(f, "(sub {x} {iv})"),
            WordExpr::Ref(name, _) => write!(f, "{name}"),
        }
    }
}
