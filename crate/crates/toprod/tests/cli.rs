mod common;

use common::*;
use rand::Rng;
use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};
use toprod::groups::{GroupElement, GroupSpec, Letter};

const SCRIPT: &str = "
(defgroup zz Z)
(registry (0 zz) (1 (zmod 3)) (tail Z))
(defword a (lit 0 1))
(defword b (lit 1 2))
(defword v (cat a b (inv b) (inv a)))
(defword p (omega (prefix) (tail (power (index affine 1 0) (exp (default affine 0 1))))))
(defword s (sub p (interval (>= w1) +inf)))
(deftriple t (left p) (right p) (coi (identity all)))
(deftriple u (left s) (right s) (coi (identity (cofinite-except w1))))
(defcoll c t u)
(assert (trivial v))
(assert (reduced p 5))
";

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toprod")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn file(tag: &str, text: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("toprod-it-{}-{tag}.tw", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path
}

fn letters_of(v: &Value) -> Vec<Letter> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| letter(x["group"].as_u64().unwrap() as u32, x["value"].as_str().unwrap().parse().unwrap()))
        .collect()
}

fn lit_form(l: &Letter) -> String {
    let GroupElement::Int(v) = l.value else { unreachable!() };
    format!("(lit {} {v})", l.group)
}

#[test]
fn printing_is_a_fixed_point_and_keeps_meaning() {
    let f = file("print", SCRIPT);
    let once = bin(&["print", f.to_str().unwrap()]);
    assert!(once.status.success());
    let g = file("print2", &stdout(&once));
    let twice = bin(&["print", g.to_str().unwrap()]);
    assert_eq!(stdout(&once), stdout(&twice));
    for word in ["v", "p", "s"] {
        let x = bin(&["project", f.to_str().unwrap(), word, "-N", "5"]);
        let y = bin(&["project", g.to_str().unwrap(), word, "-N", "5"]);
        assert_eq!(x.stdout, y.stdout, "{word}");
    }
    assert!(bin(&["check", g.to_str().unwrap()]).status.success());
}

#[test]
fn reduce_matches_the_rescanning_oracle() {
    let reg = reg2(GroupSpec::InfiniteCyclic, GroupSpec::FiniteCyclic(3));
    let f = file("reduce", "(registry (0 Z) (1 (zmod 3)) (tail Z))");
    let mut r = rng(11);
    for _ in 0..40 {
        let n = r.gen_range(0..9);
        let w = random_letters(&reg, &mut r, n, 2);
        let expr = format!("(cat {})", w.iter().map(lit_form).collect::<Vec<_>>().join(" "));
        let out = bin(&["reduce", f.to_str().unwrap(), &expr]);
        assert!(out.status.success(), "{expr}");
        let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
        let want = oracle_reduce(&reg, &w);
        assert_eq!(letters_of(&v["reduced"]), want, "{expr}");
        assert_eq!(v["trivial"], want.is_empty());
    }
}

#[test]
fn commands_are_byte_identical_across_runs() {
    let f = file("det", SCRIPT);
    let f = f.to_str().unwrap();
    let zf = file("det-z", "(registry (tail Z)) (defword p (omega (prefix) (tail (power (index affine 1 0) (exp (default affine 0 1))))))");
    let zf = zf.to_str().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["project", f, "s", "-N", "4"],
        vec!["reduced", f, "p", "-N", "4"],
        vec!["scheme", f, "v"],
        vec!["fine", f, "s", "p", "-N", "4"],
        vec!["audit", f, "c", "-N", "3"],
        vec!["build", "nastyword"],
        vec!["build", "nastyword", "--json", "-N", "3"],
        vec!["build", "diagonal", zf, "-N", "3"],
        vec!["sweep", f, "--seed", "5", "--budget", "40"],
    ];
    for args in runs {
        let (a, b) = (bin(&args), bin(&args));
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert!(!a.stdout.is_empty(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn built_nastyword_projects_to_the_ruler() {
    let built = bin(&["build", "nastyword"]);
    let f = file("nasty", &stdout(&built));
    for n in 0..=4u32 {
        let out = bin(&["project", f.to_str().unwrap(), "nasty", "-N", &n.to_string()]);
        let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
        let groups: Vec<u32> = letters_of(&v).iter().map(|l| l.group).collect();
        let want: Vec<u32> = (1u32..1 << (n + 1)).map(|i| n - i.trailing_zeros()).collect();
        assert_eq!(groups, want);
    }
}

#[test]
fn failures_exit_nonzero_with_a_message() {
    let bad = file("bad", "(registry (tail Z))\n(defword w (cat (lit 0 1)");
    let out = bin(&["print", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("2:"));
    let missing = bin(&["print", "/nonexistent/toprod.tw"]);
    assert!(!missing.status.success());
    let f = file("nontrivial", SCRIPT);
    let torsion = bin(&["build", "diagonal", f.to_str().unwrap(), "-N", "3"]);
    assert!(!torsion.status.success());
    assert!(String::from_utf8_lossy(&torsion.stderr).contains("infinite order"));
    let out = bin(&["scheme", f.to_str().unwrap(), "(cat a b)"]);
    assert_eq!((stdout(&out).as_str(), out.status.code()), ("null\n", Some(1)));
}
