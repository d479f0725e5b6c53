//! Solver export: prints a condition as an SMT-LIB document that asks
//! for a model of its negation, so `unsat` means the condition holds.
//!
//! Every document is self-contained: it sets a logic with uninterpreted
//! functions and nonlinear mixed arithmetic, declares `iota` as an
//! uninterpreted Int -> Real symbol pinned down by its two defining
//! equations iota(0) = 1 and iota(q+1) = 2 * iota(q), and declares each
//! function symbol together with a propositional stand-in for its
//! continuity and a binary predicate for root uniqueness. Root
//! uniqueness gets its defining axiom; continuity stays an assumption
//! symbol, since the conditions only ever pass it through.

use crate::formula::Formula;
use crate::term::{FSort, Term};
use crate::wp::Vc;
use num_traits::Signed;
use std::fmt::Write as _;
use std::path::Path;

/// Renders one closed condition as a complete SMT-LIB document.
pub fn smt_document(name: &str, origin: &str, line: u32, closed: &Formula) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "; condition: {name}");
    let _ = writeln!(out, "; states: {origin}");
    let _ = writeln!(out, "; source line: {line}");
    let _ = writeln!(out, "(set-logic AUFNIRA)");
    let _ = writeln!(out, "(declare-fun iota (Int) Real)");
    let _ = writeln!(out, "(assert (= (iota 0) 1.0))");
    let _ = writeln!(
        out,
        "(assert (forall ((q Int)) (= (iota (+ q 1)) (* 2.0 (iota q)))))"
    );
    for (f, _) in closed.fn_symbols() {
        let _ = writeln!(out, "(declare-fun {f} (Real) Real)");
        let _ = writeln!(out, "(declare-fun cont_{f} () Bool)");
        let _ = writeln!(out, "(declare-fun uniq_{f} (Real Real) Bool)");
        let _ = writeln!(
            out,
            "(assert (forall ((a Real) (b Real)) (= (uniq_{f} a b) (and (< a b) (exists ((r Real)) (and (<= a r) (<= r b) (= ({f} r) 0.0) (forall ((s Real)) (=> (and (<= a s) (<= s b) (= ({f} s) 0.0)) (= s r)))))))))"
        );
    }
    let mut neg = String::from("(assert (not ");
    print_formula(closed, &mut neg);
    neg.push_str("))");
    let _ = writeln!(out, "{neg}");
    let _ = writeln!(out, "(check-sat)");
    out
}

/// Writes one `.smt2` file per condition plus an `index.json` listing
/// them; returns the file names written, index last.
pub fn write_smt_dir(vcs: &[Vc], dir: &Path) -> std::io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut index = Vec::new();
    for vc in vcs {
        let file = format!("{}.smt2", vc.name());
        let doc = smt_document(&vc.name(), &vc.origin.describe(), vc.line, &vc.closed());
        std::fs::write(dir.join(&file), doc)?;
        index.push(serde_json::json!({
            "file": file,
            "name": vc.name(),
            "fun": vc.fun,
            "states": vc.origin.describe(),
            "line": vc.line,
        }));
        written.push(file);
    }
    let index_doc = serde_json::to_string_pretty(&serde_json::Value::Array(index))
        .expect("index serializes");
    std::fs::write(dir.join("index.json"), index_doc + "\n")?;
    written.push("index.json".into());
    Ok(written)
}

fn print_formula(f: &Formula, out: &mut String) {
    match f {
        Formula::TrueF => out.push_str("true"),
        Formula::Gt(a, b) => print_cmp(">", a, b, out),
        Formula::Ge(a, b) => print_cmp(">=", a, b, out),
        Formula::EqF(a, b) => print_cmp("=", a, b, out),
        Formula::Cont(name) => {
            let _ = write!(out, "cont_{name}");
        }
        Formula::Uniq(name, a, b) => {
            let _ = write!(out, "(uniq_{name} ");
            print_term(a, out);
            out.push(' ');
            print_term(b, out);
            out.push(')');
        }
        Formula::Not(g) => {
            out.push_str("(not ");
            print_formula(g, out);
            out.push(')');
        }
        Formula::And(gs) | Formula::Or(gs) => {
            let op = if matches!(f, Formula::And(_)) { "and" } else { "or" };
            match gs.len() {
                0 => out.push_str(if op == "and" { "true" } else { "false" }),
                1 => print_formula(&gs[0], out),
                _ => {
                    let _ = write!(out, "({op}");
                    for g in gs {
                        out.push(' ');
                        print_formula(g, out);
                    }
                    out.push(')');
                }
            }
        }
        Formula::Implies(a, b) => {
            out.push_str("(=> ");
            print_formula(a, out);
            out.push(' ');
            print_formula(b, out);
            out.push(')');
        }
        Formula::Forall(x, s, g) | Formula::Exists(x, s, g) => {
            let q = if matches!(f, Formula::Forall(_, _, _)) { "forall" } else { "exists" };
            let _ = write!(out, "({q} (({x} {})) ", smt_sort(*s));
            print_formula(g, out);
            out.push(')');
        }
    }
}

fn print_cmp(op: &str, a: &Term, b: &Term, out: &mut String) {
    let _ = write!(out, "({op} ");
    print_term(a, out);
    out.push(' ');
    print_term(b, out);
    out.push(')');
}

fn print_term(t: &Term, out: &mut String) {
    match t {
        Term::Var(x, _) => out.push_str(x),
        Term::ILit(n) => {
            if n.is_negative() {
                let _ = write!(out, "(- {})", n.magnitude());
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Term::RLit(r) => {
            if r.is_negative() {
                out.push_str("(- ");
                print_positive_rational(&-r.clone(), out);
                out.push(')');
            } else {
                print_positive_rational(r, out);
            }
        }
        Term::Cast(inner) => {
            out.push_str("(to_real ");
            print_term(inner, out);
            out.push(')');
        }
        Term::Add(a, b) => print_bin("+", a, b, out),
        Term::Sub(a, b) => print_bin("-", a, b, out),
        Term::Mul(a, b) => print_bin("*", a, b, out),
        Term::Neg(a) => {
            out.push_str("(- ");
            print_term(a, out);
            out.push(')');
        }
        Term::Div(a, d) => {
            out.push_str("(/ ");
            print_term(a, out);
            if d.is_negative() {
                let _ = write!(out, " (- {}.0))", d.magnitude());
            } else {
                let _ = write!(out, " {d}.0)");
            }
        }
        Term::Iota(e) => {
            out.push_str("(iota ");
            print_term(e, out);
            out.push(')');
        }
        Term::App(name, args) => {
            let _ = write!(out, "({name}");
            for a in args {
                out.push(' ');
                print_term(a, out);
            }
            out.push(')');
        }
    }
}

fn print_bin(op: &str, a: &Term, b: &Term, out: &mut String) {
    let _ = write!(out, "({op} ");
    print_term(a, out);
    out.push(' ');
    print_term(b, out);
    out.push(')');
}

fn print_positive_rational(r: &num_rational::BigRational, out: &mut String) {
    if r.is_integer() {
        let _ = write!(out, "{}.0", r.numer());
    } else {
        let _ = write!(out, "(/ {}.0 {}.0)", r.numer(), r.denom());
    }
}

fn smt_sort(s: FSort) -> &'static str {
    match s {
        FSort::Int => "Int",
        FSort::Real => "Real",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Term;

    #[test]
    fn literals_and_casts_print_in_solver_syntax() {
        let f = Formula::Gt(
            Term::Add(
                Box::new(Term::Cast(Box::new(Term::ilit(-3)))),
                Box::new(Term::rlit(3, 16)),
            ),
            Term::rlit(-1, 1),
        );
        let mut s = String::new();
        print_formula(&f, &mut s);
        assert_eq!(s, "(> (+ (to_real (- 3)) (/ 3.0 16.0)) (- 1.0))");
    }

    #[test]
    fn documents_declare_only_whats_used() {
        let plain = smt_document("T_vc9", "exit", 7, &Formula::TrueF);
        assert!(plain.contains("(set-logic AUFNIRA)"));
        assert!(plain.contains("(assert (= (iota 0) 1.0))"));
        assert!(!plain.contains("declare-fun f"));
        assert!(plain.ends_with("(check-sat)\n"));
        let with_f = smt_document(
            "T_vc0",
            "entry",
            1,
            &Formula::And(vec![
                Formula::Cont("f".into()),
                Formula::Uniq("f".into(), Term::rlit(0, 1), Term::rlit(1, 1)),
            ]),
        );
        assert!(with_f.contains("(declare-fun f (Real) Real)"));
        assert!(with_f.contains("(declare-fun cont_f () Bool)"));
        assert!(with_f.contains("(assert (not (and cont_f (uniq_f 0.0 1.0))))"));
    }

    #[test]
    fn quantifiers_bind_with_their_sorts() {
        let f = Formula::Forall(
            "p".into(),
            FSort::Int,
            Box::new(Formula::Gt(Term::Iota(Box::new(Term::ivar("p"))), Term::rlit(0, 1))),
        );
        let mut s = String::new();
        print_formula(&f, &mut s);
        assert_eq!(s, "(forall ((p Int)) (> (iota p) 0.0))");
    }
}
