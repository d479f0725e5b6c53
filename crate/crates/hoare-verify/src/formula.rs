//! Two-sorted first-order formulas, normalization, and alpha-equivalence.
//!
//! Atoms are comparisons over [`Term`]s plus the uninterpreted predicates
//! `cont(f)` and `uniq(f, a, b)`. The surface abbreviations `|t|`, `<`,
//! and `<=` are expanded by the parser, so formulas here only carry `>`,
//! `>=`, and `=` atoms.
//!
//! Normalization, used before comparing generated conditions to stored
//! ones, applies exactly these steps:
//!
//!   1. negation normal form (implications become disjunctions, negations
//!      push down to atoms; `!(a > b)` becomes `b >= a` and dually),
//!   2. ground comparisons are decided and replaced by truth values,
//!   3. bound variables are renamed canonically in traversal order,
//!   4. nested conjunctions and disjunctions are flattened, units are
//!      dropped, and absorbing elements collapse,
//!   5. the operands of `=` are put in a fixed order,
//!   6. the children of each conjunction and disjunction are sorted and
//!      deduplicated.
//!
//! No arithmetic rewriting happens: `1 - 0` stays `1 - 0`. Two formulas
//! are alpha-equivalent when some sort-respecting bijection between their
//! quantified prefixes makes the normal forms equal.

use crate::term::{FSort, Term};
use std::collections::BTreeMap;
use std::fmt;

/// A formula of the assertion language.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Formula {
    TrueF,
    /// a > b (strict).
    Gt(Term, Term),
    /// a >= b.
    Ge(Term, Term),
    /// a = b; allowed on both sorts (assertions are classical).
    EqF(Term, Term),
    /// The named function is continuous.
    Cont(String),
    /// The named function has exactly one root in the closed interval
    /// between the two terms, with a strict sign change at the ends.
    Uniq(String, Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall(String, FSort, Box<Formula>),
    Exists(String, FSort, Box<Formula>),
}

/// Shorthand for the empty disjunction, the canonical false.
pub fn false_f() -> Formula {
    Formula::Not(Box::new(Formula::TrueF))
}

impl Formula {
    /// Free variables with their sorts.
    pub fn free_vars(&self) -> BTreeMap<String, FSort> {
        let mut out = BTreeMap::new();
        self.collect_free(&mut out, &mut Vec::new());
        out
    }

    fn collect_free(&self, out: &mut BTreeMap<String, FSort>, bound: &mut Vec<String>) {
        match self {
            Formula::TrueF => {}
            Formula::Gt(a, b) | Formula::Ge(a, b) | Formula::EqF(a, b) => {
                let mut vars = BTreeMap::new();
                a.free_vars(&mut vars);
                b.free_vars(&mut vars);
                for (n, s) in vars {
                    if !bound.contains(&n) {
                        out.insert(n, s);
                    }
                }
            }
            Formula::Cont(_) => {}
            Formula::Uniq(_, a, b) => {
                let mut vars = BTreeMap::new();
                a.free_vars(&mut vars);
                b.free_vars(&mut vars);
                for (n, s) in vars {
                    if !bound.contains(&n) {
                        out.insert(n, s);
                    }
                }
            }
            Formula::Not(f) => f.collect_free(out, bound),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_free(out, bound);
                }
            }
            Formula::Implies(a, b) => {
                a.collect_free(out, bound);
                b.collect_free(out, bound);
            }
            Formula::Forall(x, _, f) | Formula::Exists(x, _, f) => {
                bound.push(x.clone());
                f.collect_free(out, bound);
                bound.pop();
            }
        }
    }

    /// Uninterpreted function symbols (from applications and from the
    /// `cont`/`uniq` predicates) with their arities; predicates report the
    /// arity of the function they constrain, which is 1 here.
    pub fn fn_symbols(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.collect_fns(&mut out);
        out
    }

    fn collect_fns(&self, out: &mut BTreeMap<String, usize>) {
        match self {
            Formula::TrueF => {}
            Formula::Gt(a, b) | Formula::Ge(a, b) | Formula::EqF(a, b) => {
                a.fn_symbols(out);
                b.fn_symbols(out);
            }
            Formula::Cont(f) => {
                out.entry(f.clone()).or_insert(1);
            }
            Formula::Uniq(f, a, b) => {
                out.entry(f.clone()).or_insert(1);
                a.fn_symbols(out);
                b.fn_symbols(out);
            }
            Formula::Not(f) => f.collect_fns(out),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_fns(out);
                }
            }
            Formula::Implies(a, b) => {
                a.collect_fns(out);
                b.collect_fns(out);
            }
            Formula::Forall(_, _, f) | Formula::Exists(_, _, f) => f.collect_fns(out),
        }
    }

    /// Capture-avoiding substitution of the term `e` for the variable `x`.
    pub fn substitute(&self, x: &str, e: &Term) -> Formula {
        let mut evars = BTreeMap::new();
        e.free_vars(&mut evars);
        self.subst_inner(x, e, &evars)
    }

    fn subst_inner(&self, x: &str, e: &Term, evars: &BTreeMap<String, FSort>) -> Formula {
        // Anywhere the variable is not free the formula is untouched;
        // in particular no binder is renamed just because it collides
        // with the replacement's variables.
        if !self.free_vars().contains_key(x) {
            return self.clone();
        }
        match self {
            Formula::TrueF => Formula::TrueF,
            Formula::Gt(a, b) => Formula::Gt(a.substitute(x, e), b.substitute(x, e)),
            Formula::Ge(a, b) => Formula::Ge(a.substitute(x, e), b.substitute(x, e)),
            Formula::EqF(a, b) => Formula::EqF(a.substitute(x, e), b.substitute(x, e)),
            Formula::Cont(f) => Formula::Cont(f.clone()),
            Formula::Uniq(f, a, b) => {
                Formula::Uniq(f.clone(), a.substitute(x, e), b.substitute(x, e))
            }
            Formula::Not(f) => Formula::Not(Box::new(f.subst_inner(x, e, evars))),
            Formula::And(fs) => {
                Formula::And(fs.iter().map(|f| f.subst_inner(x, e, evars)).collect())
            }
            Formula::Or(fs) => {
                Formula::Or(fs.iter().map(|f| f.subst_inner(x, e, evars)).collect())
            }
            Formula::Implies(a, b) => Formula::Implies(
                Box::new(a.subst_inner(x, e, evars)),
                Box::new(b.subst_inner(x, e, evars)),
            ),
            Formula::Forall(y, s, f) => {
                let (y2, f2) = rename_if_captures(y, *s, f, x, evars);
                if y2 == x {
                    return Formula::Forall(y2, *s, Box::new(f2));
                }
                Formula::Forall(y2, *s, Box::new(f2.subst_inner(x, e, evars)))
            }
            Formula::Exists(y, s, f) => {
                let (y2, f2) = rename_if_captures(y, *s, f, x, evars);
                if y2 == x {
                    return Formula::Exists(y2, *s, Box::new(f2));
                }
                Formula::Exists(y2, *s, Box::new(f2.subst_inner(x, e, evars)))
            }
        }
    }

    /// Logical complement, kept in negation normal form at the atom level.
    /// Comparisons flip exactly (`!(a > b)` is `b >= a`); predicates and
    /// equalities keep an explicit negation.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::TrueF => false_f(),
            Formula::Gt(a, b) => Formula::Ge(b.clone(), a.clone()),
            Formula::Ge(a, b) => Formula::Gt(b.clone(), a.clone()),
            Formula::EqF(_, _) | Formula::Cont(_) | Formula::Uniq(_, _, _) => {
                Formula::Not(Box::new(self.clone()))
            }
            Formula::Not(f) => (**f).clone(),
            Formula::And(fs) => Formula::Or(fs.iter().map(Formula::negate).collect()),
            Formula::Or(fs) => Formula::And(fs.iter().map(Formula::negate).collect()),
            Formula::Implies(a, b) => Formula::And(vec![(**a).clone(), b.negate()]),
            Formula::Forall(x, s, f) => Formula::Exists(x.clone(), *s, Box::new(f.negate())),
            Formula::Exists(x, s, f) => Formula::Forall(x.clone(), *s, Box::new(f.negate())),
        }
    }

    /// The documented normal form; see the module doc for the step list.
    pub fn normalize(&self) -> Formula {
        let nnf = self.nnf(true);
        let renamed = canonical_binders(&nnf, &mut 0);
        flatten(&renamed)
    }

    fn nnf(&self, positive: bool) -> Formula {
        match (self, positive) {
            (Formula::TrueF, true) => Formula::TrueF,
            (Formula::TrueF, false) => false_f(),
            (Formula::Gt(_, _) | Formula::Ge(_, _) | Formula::EqF(_, _), _) => {
                let atom = if positive { self.clone() } else { self.negate() };
                fold_ground(atom)
            }
            (Formula::Cont(_) | Formula::Uniq(_, _, _), true) => self.clone(),
            (Formula::Cont(_) | Formula::Uniq(_, _, _), false) => {
                Formula::Not(Box::new(self.clone()))
            }
            (Formula::Not(f), _) => f.nnf(!positive),
            (Formula::And(fs), true) | (Formula::Or(fs), false) => {
                Formula::And(fs.iter().map(|f| f.nnf(positive)).collect())
            }
            (Formula::Or(fs), true) | (Formula::And(fs), false) => {
                Formula::Or(fs.iter().map(|f| f.nnf(positive)).collect())
            }
            (Formula::Implies(a, b), true) => Formula::Or(vec![a.nnf(false), b.nnf(true)]),
            (Formula::Implies(a, b), false) => Formula::And(vec![a.nnf(true), b.nnf(false)]),
            (Formula::Forall(x, s, f), true) | (Formula::Exists(x, s, f), false) => {
                Formula::Forall(x.clone(), *s, Box::new(f.nnf(positive)))
            }
            (Formula::Exists(x, s, f), true) | (Formula::Forall(x, s, f), false) => {
                Formula::Exists(x.clone(), *s, Box::new(f.nnf(positive)))
            }
        }
    }

    /// Strips the outer universal prefix, returning the bound variables in
    /// order and the matrix.
    pub fn strip_forall_prefix(&self) -> (Vec<(String, FSort)>, &Formula) {
        let mut vars = Vec::new();
        let mut body = self;
        while let Formula::Forall(x, s, f) = body {
            vars.push((x.clone(), *s));
            body = f;
        }
        (vars, body)
    }

    /// Universal closure over the given variables, outermost first.
    pub fn forall_closure(self, vars: &[(String, FSort)]) -> Formula {
        let mut out = self;
        for (x, s) in vars.iter().rev() {
            out = Formula::Forall(x.clone(), *s, Box::new(out));
        }
        out
    }
}

/// Renames the binder when it would capture a variable of the substituted
/// term. Returns the possibly renamed binder and body.
fn rename_if_captures(
    y: &str,
    s: FSort,
    body: &Formula,
    x: &str,
    evars: &BTreeMap<String, FSort>,
) -> (String, Formula) {
    if y == x || !evars.contains_key(y) {
        return (y.to_string(), (*body).clone());
    }
    let free = body.free_vars();
    let mut fresh = format!("{y}'");
    while evars.contains_key(&fresh) || free.contains_key(&fresh) || fresh == x {
        fresh.push('\'');
    }
    let renamed = body.substitute(y, &Term::Var(fresh.clone(), s));
    (fresh, renamed)
}

/// Decides a ground comparison exactly; non-ground atoms pass through.
fn fold_ground(atom: Formula) -> Formula {
    let verdict = match &atom {
        Formula::Gt(a, b) => match (a.const_eval(), b.const_eval()) {
            (Some(x), Some(y)) => Some(x > y),
            _ => None,
        },
        Formula::Ge(a, b) => match (a.const_eval(), b.const_eval()) {
            (Some(x), Some(y)) => Some(x >= y),
            _ => None,
        },
        Formula::EqF(a, b) => match (a.const_eval(), b.const_eval()) {
            (Some(x), Some(y)) => Some(x == y),
            _ => None,
        },
        Formula::Not(inner) => {
            return match fold_ground((**inner).clone()) {
                Formula::TrueF => false_f(),
                f if f == false_f() => Formula::TrueF,
                f => Formula::Not(Box::new(f)),
            };
        }
        _ => None,
    };
    match verdict {
        Some(true) => Formula::TrueF,
        Some(false) => false_f(),
        None => atom,
    }
}

/// Renames every binder to a reserved name in traversal order, so bound
/// variable names never influence comparison or collide with prefix
/// renaming.
fn canonical_binders(f: &Formula, counter: &mut usize) -> Formula {
    match f {
        Formula::Forall(x, s, body) | Formula::Exists(x, s, body) => {
            let name = format!("_q{counter}");
            *counter += 1;
            let renamed = body.substitute(x, &Term::Var(name.clone(), *s));
            let inner = canonical_binders(&renamed, counter);
            if matches!(f, Formula::Forall(_, _, _)) {
                Formula::Forall(name, *s, Box::new(inner))
            } else {
                Formula::Exists(name, *s, Box::new(inner))
            }
        }
        Formula::And(fs) => Formula::And(fs.iter().map(|g| canonical_binders(g, counter)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| canonical_binders(g, counter)).collect()),
        Formula::Not(g) => Formula::Not(Box::new(canonical_binders(g, counter))),
        Formula::Implies(a, b) => Formula::Implies(
            Box::new(canonical_binders(a, counter)),
            Box::new(canonical_binders(b, counter)),
        ),
        _ => f.clone(),
    }
}

/// Flattens nests, drops units, collapses absorbers, orders `=` operands,
/// sorts and deduplicates children, and unwraps singletons.
fn flatten(f: &Formula) -> Formula {
    match f {
        Formula::And(fs) => {
            let mut out = Vec::new();
            for g in fs {
                match flatten(g) {
                    Formula::TrueF => {}
                    Formula::And(inner) => out.extend(inner),
                    other if other == false_f() => return false_f(),
                    other => out.push(other),
                }
            }
            out.sort();
            out.dedup();
            match out.len() {
                0 => Formula::TrueF,
                1 => out.pop().unwrap(),
                _ => Formula::And(out),
            }
        }
        Formula::Or(fs) => {
            let mut out = Vec::new();
            for g in fs {
                match flatten(g) {
                    Formula::TrueF => return Formula::TrueF,
                    Formula::Or(inner) => out.extend(inner),
                    other if other == false_f() => {}
                    other => out.push(other),
                }
            }
            out.sort();
            out.dedup();
            match out.len() {
                0 => false_f(),
                1 => out.pop().unwrap(),
                _ => Formula::Or(out),
            }
        }
        Formula::Not(g) => match flatten(g) {
            Formula::TrueF => false_f(),
            inner if inner == false_f() => Formula::TrueF,
            inner => Formula::Not(Box::new(inner)),
        },
        Formula::Implies(a, b) => {
            Formula::Implies(Box::new(flatten(a)), Box::new(flatten(b)))
        }
        // Both sorts denote nonempty domains, so a binder its body never
        // mentions can be dropped.
        Formula::Forall(x, s, g) => {
            let inner = flatten(g);
            if inner.free_vars().contains_key(x) {
                Formula::Forall(x.clone(), *s, Box::new(inner))
            } else {
                inner
            }
        }
        Formula::Exists(x, s, g) => {
            let inner = flatten(g);
            if inner.free_vars().contains_key(x) {
                Formula::Exists(x.clone(), *s, Box::new(inner))
            } else {
                inner
            }
        }
        Formula::EqF(a, b) => {
            if a <= b {
                Formula::EqF(a.clone(), b.clone())
            } else {
                Formula::EqF(b.clone(), a.clone())
            }
        }
        _ => f.clone(),
    }
}

/// Alpha-equivalence of two universally closed formulas: some bijection
/// between the quantified prefixes, respecting sorts, makes the normalized
/// matrices equal. Prefix variables not free in the matrix are ignored.
pub fn alpha_equivalent(a: &Formula, b: &Formula) -> bool {
    let (avs, abody) = a.strip_forall_prefix();
    let (bvs, bbody) = b.strip_forall_prefix();
    let afree = abody.free_vars();
    let bfree = bbody.free_vars();
    let mut avs: Vec<(String, FSort)> =
        avs.into_iter().filter(|(n, _)| afree.contains_key(n)).collect();
    let bvs: Vec<(String, FSort)> =
        bvs.into_iter().filter(|(n, _)| bfree.contains_key(n)).collect();
    // Free variables that are not in either prefix must agree by name.
    if avs.len() != bvs.len() {
        return false;
    }
    avs.sort();
    let bnorm = bbody.normalize();
    let mut used = vec![false; bvs.len()];
    try_match(&avs, 0, &bvs, &mut used, &mut Vec::new(), abody, &bnorm)
}

fn try_match(
    avs: &[(String, FSort)],
    i: usize,
    bvs: &[(String, FSort)],
    used: &mut Vec<bool>,
    picks: &mut Vec<(String, String, FSort)>,
    abody: &Formula,
    bnorm: &Formula,
) -> bool {
    if i == avs.len() {
        // Apply the renaming in two passes through reserved temporaries so
        // swaps do not collide.
        let mut renamed = abody.clone();
        for (k, (from, _, s)) in picks.iter().enumerate() {
            renamed = renamed.substitute(from, &Term::Var(format!("_r{k}"), *s));
        }
        for (k, (_, to, s)) in picks.iter().enumerate() {
            renamed = renamed.substitute(&format!("_r{k}"), &Term::Var(to.clone(), *s));
        }
        return renamed.normalize() == *bnorm;
    }
    let (ref aname, asort) = avs[i];
    for j in 0..bvs.len() {
        if used[j] || bvs[j].1 != asort {
            continue;
        }
        used[j] = true;
        picks.push((aname.clone(), bvs[j].0.clone(), asort));
        if try_match(avs, i + 1, bvs, used, picks, abody, bnorm) {
            return true;
        }
        picks.pop();
        used[j] = false;
    }
    false
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::TrueF => write!(f, "true"),
            Formula::Gt(a, b) => write!(f, "{a} > {b}"),
            Formula::Ge(a, b) => write!(f, "{a} >= {b}"),
            Formula::EqF(a, b) => write!(f, "{a} = {b}"),
            Formula::Cont(g) => write!(f, "cont({g})"),
            Formula::Uniq(g, a, b) => write!(f, "uniq({g}, {a}, {b})"),
            Formula::Not(g) => write!(f, "!({g})"),
            Formula::And(fs) => join(f, fs, "&&"),
            Formula::Or(fs) => join(f, fs, "||"),
            Formula::Implies(a, b) => write!(f, "(({a}) -> ({b}))"),
            Formula::Forall(x, s, g) => write!(f, "(forall {x}:{s}. ({g}))"),
            Formula::Exists(x, s, g) => write!(f, "(exists {x}:{s}. ({g}))"),
        }
    }
}

fn join(f: &mut fmt::Formatter<'_>, fs: &[Formula], op: &str) -> fmt::Result {
    write!(f, "(")?;
    for (i, g) in fs.iter().enumerate() {
        if i > 0 {
            write!(f, " {op} ")?;
        }
        write!(f, "({g})")?;
    }
    write!(f, ")")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(a: Term, b: Term) -> Formula {
        Formula::Gt(a, b)
    }

    #[test]
    fn substitution_is_identity_when_not_free() {
        let f = gt(Term::rvar("x"), Term::rlit(0, 1));
        assert_eq!(f.substitute("y", &Term::rlit(7, 1)), f);
    }

    #[test]
    fn substitution_renames_a_capturing_binder() {
        // (forall x. x > y)[y := x + 1] must rename the binder.
        let f = Formula::Forall(
            "x".into(),
            FSort::Real,
            Box::new(gt(Term::rvar("x"), Term::rvar("y"))),
        );
        let e = Term::Add(Box::new(Term::rvar("x")), Box::new(Term::rlit(1, 1)));
        let g = f.substitute("y", &e);
        match &g {
            Formula::Forall(name, _, body) => {
                assert_ne!(name, "x");
                assert_eq!(
                    **body,
                    gt(Term::Var(name.clone(), FSort::Real), e.clone())
                );
            }
            other => panic!("expected a quantifier, got {other}"),
        }
    }

    #[test]
    fn normalization_decides_ground_atoms() {
        let f = Formula::And(vec![
            Formula::EqF(Term::ilit(0), Term::ilit(0)),
            Formula::Ge(Term::rlit(1, 1), Term::rlit(1, 1)),
            gt(Term::rvar("x"), Term::rlit(0, 1)),
        ]);
        assert_eq!(f.normalize(), gt(Term::rvar("x"), Term::rlit(0, 1)));
        let dead = Formula::Or(vec![gt(Term::ilit(0), Term::ilit(1))]);
        assert_eq!(dead.normalize(), false_f());
    }

    #[test]
    fn normalization_flattens_and_orders() {
        let a = gt(Term::rvar("x"), Term::rlit(0, 1));
        let b = gt(Term::rvar("y"), Term::rlit(0, 1));
        let lhs = Formula::And(vec![b.clone(), Formula::And(vec![a.clone(), b.clone()])]);
        let rhs = Formula::And(vec![a, b]);
        assert_eq!(lhs.normalize(), rhs.normalize());
    }

    #[test]
    fn implication_and_its_disjunctive_form_normalize_alike() {
        let p = gt(Term::rvar("x"), Term::rlit(0, 1));
        let q = gt(Term::rvar("y"), Term::rvar("x"));
        let imp = Formula::Implies(Box::new(p.clone()), Box::new(q.clone()));
        let or = Formula::Or(vec![p.negate(), q]);
        assert_eq!(imp.normalize(), or.normalize());
    }

    #[test]
    fn alpha_equivalence_matches_renamed_prefixes() {
        let f = Formula::Forall(
            "z".into(),
            FSort::Real,
            Box::new(Formula::Implies(
                Box::new(Formula::EqF(Term::rvar("z"), Term::rvar("x"))),
                Box::new(Formula::Ge(Term::rvar("z"), Term::rvar("x"))),
            )),
        );
        let g = Formula::Forall(
            "r".into(),
            FSort::Real,
            Box::new(Formula::Implies(
                Box::new(Formula::EqF(Term::rvar("x"), Term::rvar("r"))),
                Box::new(Formula::Ge(Term::rvar("r"), Term::rvar("x"))),
            )),
        );
        assert!(alpha_equivalent(&f, &g));
        // A sort clash in the prefix is not bridgeable.
        let h = Formula::Forall(
            "r".into(),
            FSort::Int,
            Box::new(Formula::EqF(Term::ivar("r"), Term::ivar("r"))),
        );
        assert!(!alpha_equivalent(&f, &h));
    }

    #[test]
    fn alpha_equivalence_sees_through_conjunct_order() {
        let a = gt(Term::rvar("u"), Term::rlit(0, 1));
        let b = Formula::Uniq("f".into(), Term::rlit(0, 1), Term::rvar("u"));
        let f = Formula::Forall(
            "u".into(),
            FSort::Real,
            Box::new(Formula::And(vec![a.clone(), b.clone()])),
        );
        let g = Formula::Forall(
            "v".into(),
            FSort::Real,
            Box::new(Formula::And(vec![
                Formula::Uniq("f".into(), Term::rlit(0, 1), Term::rvar("v")),
                gt(Term::rvar("v"), Term::rlit(0, 1)),
            ])),
        );
        assert!(alpha_equivalent(&f, &g));
        // Different function symbol names do not match.
        let h = Formula::Forall(
            "v".into(),
            FSort::Real,
            Box::new(Formula::And(vec![
                Formula::Uniq("g".into(), Term::rlit(0, 1), Term::rvar("v")),
                gt(Term::rvar("v"), Term::rlit(0, 1)),
            ])),
        );
        assert!(!alpha_equivalent(&f, &h));
    }
}
