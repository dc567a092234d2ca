//! S-expression reader with source locations.

use super::CliError;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Loc {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom(String, Loc),
    List(Vec<Sexp>, Loc),
}

impl Sexp {
    pub fn loc(&self) -> Loc {
        match self {
            Sexp::Atom(_, l) | Sexp::List(_, l) => *l,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            Sexp::List(..) => None,
        }
    }

    /// The items of a list whose head is the atom `head`.
    pub fn form(&self, head: &str) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) if items.first().and_then(Sexp::atom) == Some(head) => Some(&items[1..]),
            _ => None,
        }
    }

    pub fn head(&self) -> Option<&str> {
        match self {
            Sexp::List(items, _) => items.first().and_then(Sexp::atom),
            Sexp::Atom(..) => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a, _) => write!(f, "{a}"),
            Sexp::List(items, _) => {
                write!(f, "(")?;
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Reads every top-level expression of `text`. `;` starts a line comment.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, CliError> {
    let mut stack: Vec<(Vec<Sexp>, Loc)> = Vec::new();
    let mut out = Vec::new();
    let mut atom: Option<(String, Loc)> = None;
    let (mut line, mut col) = (1, 0);
    let mut comment = false;
    for c in text.chars() {
        if c == '\n' {
            line += 1;
            col = 0;
        } else {
            col += 1;
        }
        let here = Loc { line, col };
        if comment {
            comment = c != '\n';
            continue;
        }
        let delimiter = c.is_whitespace() || c == '(' || c == ')' || c == ';';
        if delimiter {
            if let Some((a, l)) = atom.take() {
                push(&mut stack, &mut out, Sexp::Atom(a, l));
            }
        }
        match c {
            ';' => comment = true,
            '(' => stack.push((Vec::new(), here)),
            ')' => {
                let (items, l) = stack.pop().ok_or_else(|| CliError::syntax(here, "unexpected `)`"))?;
                push(&mut stack, &mut out, Sexp::List(items, l));
            }
            c if c.is_whitespace() => {}
            c => match &mut atom {
                Some((a, _)) => a.push(c),
                None => atom = Some((c.to_string(), here)),
            },
        }
    }
    if let Some((a, l)) = atom.take() {
        push(&mut stack, &mut out, Sexp::Atom(a, l));
    }
    if let Some((_, l)) = stack.last() {
        return Err(CliError::syntax(*l, "unclosed `(`"));
    }
    Ok(out)
}

fn push(stack: &mut [(Vec<Sexp>, Loc)], out: &mut Vec<Sexp>, x: Sexp) {
    match stack.last_mut() {
        Some((items, _)) => items.push(x),
        None => out.push(x),
    }
}

/// Reads exactly one expression.
pub fn read_one(text: &str) -> Result<Sexp, CliError> {
    let mut all = read_all(text)?;
    match all.len() {
        1 => Ok(all.pop().expect("one item")),
        0 => Err(CliError::syntax(Loc { line: 1, col: 1 }, "empty input")),
        _ => Err(CliError::syntax(all[1].loc(), "trailing input")),
    }
}
