//! Randomized algebraic laws: substitution on random formulas with
//! shadowing binders, and sequencing of weakest preconditions.

use hoare_verify::{wp_stmts, FSort, Formula, Term};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use std::collections::BTreeSet;

fn int_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (-8i64..=8).prop_map(|n| Term::ILit(BigInt::from(n))),
        Just(Term::ivar("n")),
        Just(Term::ivar("m")),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::Sub(Box::new(a), Box::new(b))),
            inner.prop_map(|a| Term::Neg(Box::new(a))),
        ]
    })
}

fn real_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (-8i64..=8, 1i64..=4).prop_map(|(n, d)| Term::RLit(BigRational::new(n.into(), d.into()))),
        Just(Term::rvar("x")),
        Just(Term::rvar("y")),
        int_term().prop_map(|t| Term::Cast(Box::new(t))),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::Mul(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Term::Neg(Box::new(a))),
            (inner.clone(), 1i64..=4).prop_map(|(a, d)| Term::Div(Box::new(a), BigInt::from(d))),
            int_term().prop_map(|e| Term::Iota(Box::new(e))),
            inner.prop_map(|a| Term::App("f".into(), vec![a])),
        ]
    })
}

fn formula() -> impl Strategy<Value = Formula> {
    let atom = prop_oneof![
        Just(Formula::TrueF),
        (real_term(), real_term()).prop_map(|(a, b)| Formula::Gt(a, b)),
        (real_term(), real_term()).prop_map(|(a, b)| Formula::Ge(a, b)),
        (int_term(), int_term()).prop_map(|(a, b)| Formula::EqF(a, b)),
        Just(Formula::Cont("f".into())),
        (real_term(), real_term()).prop_map(|(a, b)| Formula::Uniq("f".into(), a, b)),
    ];
    atom.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| Formula::Not(Box::new(f))),
            prop::collection::vec(inner.clone(), 0..3).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 0..3).prop_map(Formula::Or),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Formula::Implies(Box::new(a), Box::new(b))),
            // Binder names collide with the free pool on purpose, so
            // shadowing and capture get exercised.
            (prop_oneof![Just("x"), Just("y"), Just("v")], inner.clone())
                .prop_map(|(n, f)| Formula::Forall(n.into(), FSort::Real, Box::new(f))),
            (prop_oneof![Just("n"), Just("w")], inner)
                .prop_map(|(n, f)| Formula::Exists(n.into(), FSort::Int, Box::new(f))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn substitution_ignores_variables_that_are_not_free(q in formula(), e in real_term()) {
        let fresh = "q_unused";
        prop_assert!(!q.free_vars().contains_key(fresh));
        prop_assert_eq!(q.substitute(fresh, &e), q);
    }

    #[test]
    fn disjoint_substitutions_commute(q in formula(), d in int_term(), e in int_term()) {
        // x := d then y := e equals y := e then x := d as long as
        // neither replacement mentions the other's variable.
        let (x, y) = ("n", "m");
        // Instead of rejecting entangled draws, rename the offending
        // occurrences to fresh integer variables.
        let d = d.substitute(y, &Term::ivar("j"));
        let e = e.substitute(x, &Term::ivar("k"));
        prop_assert!(!term_vars(&d).contains(y) && !term_vars(&e).contains(x));
        let left = q.substitute(x, &d).substitute(y, &e);
        let right = q.substitute(y, &e).substitute(x, &d);
        prop_assert!(
            hoare_verify::alpha_equivalent(&left, &right),
            "left {left} != right {right}"
        );
    }

    #[test]
    fn substitutions_compose(q in formula(), d in real_term(), e in real_term()) {
        // x := d then y := e equals y := e then x := d[e/y], as long as
        // e does not mention x (so the outer step cannot reintroduce it).
        let (x, y) = ("x", "y");
        prop_assume!(!term_vars(&e).contains(x));
        let left = q.substitute(x, &d).substitute(y, &e);
        let right = q.substitute(y, &e).substitute(x, &d.substitute(y, &e));
        prop_assert!(
            hoare_verify::alpha_equivalent(&left, &right),
            "left {left} != right {right}"
        );
    }

    #[test]
    fn sequencing_weakest_preconditions_composes(q in formula(), split in 0usize..=3) {
        // Any split of a straight-line block pushes the post through in
        // two stages to the same formula as one pass.
        let prog = sign_block();
        let f = prog.function("Chain").expect("exists");
        let stmts = &f.body.0;
        let split = split.min(stmts.len());
        let whole = wp_stmts(&prog, "Chain", stmts, &q).expect("wp");
        let tail = wp_stmts(&prog, "Chain", &stmts[split..], &q).expect("wp");
        let staged = wp_stmts(&prog, "Chain", &stmts[..split], &tail).expect("wp");
        prop_assert_eq!(whole, staged);
    }
}

fn term_vars(t: &Term) -> BTreeSet<String> {
    let mut m = std::collections::BTreeMap::new();
    t.free_vars(&mut m);
    m.into_keys().collect()
}

fn sign_block() -> erc_lang::Program {
    let src = "\
REAL Chain(INTEGER p, REAL x, REAL y) {
    REAL v := x + y;
    v := v * y;
    REAL w := v - x;
    RETURN w;
}
";
    let mut prog = erc_lang::parse(src, "chain.erc").expect("parses");
    erc_lang::check_program(&mut prog, &BTreeSet::new()).expect("sorts");
    prog
}
