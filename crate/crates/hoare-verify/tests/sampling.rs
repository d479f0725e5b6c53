//! Sampled validity of the stored conditions, refutation of the stored
//! broken variants, agreement between the loop rule and the plain
//! body weakest precondition, and a smoke check of the contracts
//! against actual program runs.

use erc_lang::{ChoicePolicy, EvalBudget, ExternalFns, ResultRepr, RunConfig, Value};
use hoare_verify::{
    annotation_env, false_f, parse_formula, parse_term, parse_vc_file, sample_check, wp_if_choose,
    wp_stmts, Formula, SampleConfig, Term,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

fn goldens_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("goldens")
}

fn load_vc(path: &Path) -> Formula {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    parse_vc_file(&text)
        .unwrap_or_else(|e| panic!("{} does not parse: {e}", path.display()))
        .closed()
}

fn load_prog(name: &str) -> erc_lang::Program {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    let src = std::fs::read_to_string(&path).expect("corpus file is readable");
    let mut prog = erc_lang::parse(&src, name).expect("corpus file parses");
    let externals: BTreeSet<String> = [String::from("f")].into();
    erc_lang::check_program(&mut prog, &externals).expect("corpus file sorts");
    prog
}

#[test]
fn stored_conditions_survive_default_sampling() {
    let mut checked = 0;
    for entry in std::fs::read_dir(goldens_dir()).expect("goldens dir") {
        let path = entry.expect("entry").path();
        if !path.extension().is_some_and(|e| e == "vc") {
            continue;
        }
        let f = load_vc(&path);
        let out = sample_check(&f, &SampleConfig::default()).expect("supported shape");
        assert!(
            out.counterexample.is_none(),
            "{} refuted: {}",
            path.display(),
            out.counterexample.unwrap()
        );
        checked += 1;
    }
    assert_eq!(checked, 11, "five bracket-search plus six rounding conditions");
}

#[test]
fn stored_broken_variants_are_refuted() {
    let mutants = [
        "epsilon_dropped.vc",
        "invariant_weakened.vc",
        "definedness_dropped.vc",
        "bracket_flipped.vc",
        "variant_flipped.vc",
    ];
    for name in mutants {
        let path = goldens_dir().join("mutants").join(name);
        let f = load_vc(&path);
        let out = sample_check(&f, &SampleConfig::default()).expect("supported shape");
        assert!(
            out.counterexample.is_some(),
            "{name} survived {} samples",
            out.samples
        );
    }
}

#[test]
fn weakest_preconditions_are_monotone_on_straight_line_code() {
    // Push two posts, the first pointwise stronger, through the same
    // straight-line block; the implication must survive sampling both
    // before and after.
    let prog = load_prog("trisection.erc");
    let f = prog.function("Trisection").expect("exists");
    let body: Vec<erc_lang::Stmt> = f
        .body
        .0
        .iter()
        .filter(|s| !matches!(s.kind, erc_lang::StmtKind::While { .. }))
        .cloned()
        .collect();
    let env = annotation_env(&prog, f).expect("env");
    let pairs = [
        ("y - x > 1/4 && x >= 0", "y - x > 1/8"),
        ("uniq(f, x, y) && cont(f)", "uniq(f, x, y)"),
        ("x = 0 && y > 1/2", "y > x"),
    ];
    for (strong, weak) in pairs {
        let q1 = parse_formula(strong, &env).expect("parses");
        let q2 = parse_formula(weak, &env).expect("parses");
        let direct = Formula::Implies(Box::new(q1.clone()), Box::new(q2.clone()));
        let out = sample_check(&direct.clone().forall_closure(&direct.free_vars().into_iter().collect::<Vec<_>>()), &SampleConfig::default())
            .expect("supported");
        assert!(out.counterexample.is_none(), "{strong} should imply {weak}");
        let w1 = wp_stmts(&prog, "Trisection", &body, &q1).expect("wp");
        let w2 = wp_stmts(&prog, "Trisection", &body, &q2).expect("wp");
        let lifted = Formula::Implies(Box::new(w1), Box::new(w2));
        let lifted = lifted.clone().forall_closure(&lifted.free_vars().into_iter().collect::<Vec<_>>());
        let out = sample_check(&lifted, &SampleConfig::default()).expect("supported");
        assert!(
            out.counterexample.is_none(),
            "monotonicity broke pushing {strong} / {weak}: {}",
            out.counterexample.unwrap()
        );
    }
}

#[test]
fn loop_rule_and_body_weakest_precondition_agree() {
    // The split preservation conditions say exactly that the snapshot
    // antecedent plus branch availability lands in the body's weakest
    // precondition of the decreased-invariant post. Rebuild that claim
    // from the loop's own annotations and sample it.
    let prog = load_prog("trisection.erc");
    let f = prog.function("Trisection").expect("exists");
    let mut env = annotation_env(&prog, f).expect("env");
    env.vars.insert("z".into(), hoare_verify::FSort::Real);
    let (inv_text, var_text, eps_text, body) = {
        let mut found = None;
        for s in &f.body.0 {
            if let erc_lang::StmtKind::While { annots, body, .. } = &s.kind {
                let text = |k: erc_lang::AnnotKind| {
                    annots.iter().find(|a| a.kind == k).expect("annotated").text.clone()
                };
                found = Some((
                    text(erc_lang::AnnotKind::Invariant),
                    text(erc_lang::AnnotKind::Variant),
                    text(erc_lang::AnnotKind::Epsilon),
                    body.0.clone(),
                ));
            }
        }
        found.expect("the search loop exists")
    };
    let inv = parse_formula(&inv_text, &env).expect("invariant parses");
    let (variant, _) = parse_term(&var_text, &env, None).expect("variant parses");
    let (eps, _) = parse_term(&eps_text, &env, None).expect("epsilon parses");
    let exit_g = parse_formula("iota(p) > y - x", &env).expect("parses");
    let cont_g = parse_formula("y - x > iota(p - 1)", &env).expect("parses");
    let branch0 = parse_formula("0 > f((2*x + y) / 3) * f(y)", &env).expect("parses");
    let branch1 = parse_formula("0 > f(x) * f((x + 2*y) / 3)", &env).expect("parses");
    let z = Term::Var("z".into(), hoare_verify::FSort::Real);
    let snapshot = Formula::And(vec![
        inv.clone(),
        cont_g.clone(),
        Formula::EqF(variant.clone(), z.clone()),
    ]);
    let post = Formula::And(vec![
        Formula::Or(vec![exit_g, cont_g]),
        inv,
        Formula::Ge(Term::Sub(Box::new(z), Box::new(eps)), variant),
    ]);
    let body_wp = wp_stmts(&prog, "Trisection", &body, &post).expect("wp");
    let claim = Formula::Implies(
        Box::new(Formula::And(vec![snapshot, Formula::Or(vec![branch0, branch1])])),
        Box::new(body_wp),
    );
    let closed = claim.clone().forall_closure(&claim.free_vars().into_iter().collect::<Vec<_>>());
    let out = sample_check(&closed, &SampleConfig::default()).expect("supported");
    assert!(
        out.counterexample.is_none(),
        "rule and body wp disagree: {}",
        out.counterexample.unwrap()
    );
    assert!(out.vacuous < out.samples, "the agreement claim never fired");
}

#[test]
fn a_branch_without_available_guards_is_refuted_immediately() {
    let dead = wp_if_choose(&false_f(), &false_f(), Formula::TrueF, Formula::TrueF);
    let out = sample_check(&dead, &SampleConfig::default()).expect("supported");
    assert_eq!(out.counterexample.expect("no guard can fire").index, 0);
}

#[test]
fn sign_style_soft_branching_verifies_cleanly() {
    let src = "\
//@ pre: x > 0 || 0 > x
//@ post: result * x >= 0
REAL Sign(INTEGER p, REAL x) {
    IF choose(0 > x, x > 0) THEN {
        RETURN 1;
    } ELSE {
        RETURN 0 - 1;
    }
}
";
    let mut prog = erc_lang::parse(src, "sign.erc").expect("parses");
    erc_lang::check_program(&mut prog, &BTreeSet::new()).expect("sorts");
    let vcs = hoare_verify::generate_vcs(&prog).expect("generates");
    assert_eq!(vcs.len(), 1);
    let out = sample_check(&vcs[0].closed(), &SampleConfig::default()).expect("supported");
    assert!(
        out.counterexample.is_none(),
        "sign condition refuted: {}",
        out.counterexample.unwrap()
    );
    assert!(out.vacuous < out.samples);
}

/// Runs a corpus program and hands back the integer result.
fn run_int(
    prog: &erc_lang::Program,
    checked: &erc_lang::CheckedProgram,
    entry: &str,
    args: Vec<Value>,
    seed: u64,
) -> BigInt {
    let cfg = RunConfig { policy: ChoicePolicy::SeededRandom(seed), budget: EvalBudget::default() };
    let out = erc_lang::run_program(prog, checked, ExternalFns::new(), entry, args, -10, cfg)
        .expect("run completes");
    match out.result {
        ResultRepr::Int(k) => k,
        other => panic!("expected an INTEGER result, got {other}"),
    }
}

#[test]
fn executions_respect_their_contracts() {
    // Every run whose inputs satisfy the precondition must satisfy the
    // postcondition with the returned value in place. Only Round and
    // PivotIdx have postconditions over inputs and result alone; the
    // bracket search states its post over the loop's internal bracket,
    // which a finished run no longer exposes, so it is checked by the
    // enclosure acceptance suite instead.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);

    let src = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/round.erc"),
    )
    .expect("readable");
    let mut round = erc_lang::parse(&src, "round.erc").expect("parses");
    let round_checked = erc_lang::check_program(&mut round, &BTreeSet::new()).expect("sorts");

    for case in 0..500u64 {
        let x = BigRational::new(rng.gen_range(-2048i64..=2048).into(), 16.into());
        let k = run_int(
            &round,
            &round_checked,
            "Round",
            vec![Value::Real(corpus::real_of_rational(&x))],
            case,
        );
        let diff = (&x - BigRational::from_integer(k.clone())).abs();
        assert!(diff < BigRational::one(), "Round({x}) = {k} misses its contract");
    }

    let src = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/pivot.erc"),
    )
    .expect("readable");
    let mut pivot = erc_lang::parse(&src, "pivot.erc").expect("parses");
    let pivot_checked = erc_lang::check_program(&mut pivot, &BTreeSet::new()).expect("sorts");

    for case in 0..500u64 {
        let m: usize = rng.gen_range(1..=9);
        let mut entries: Vec<BigRational> = (0..m)
            .map(|_| BigRational::new(rng.gen_range(-64i64..=64).into(), 16.into()))
            .collect();
        if entries.iter().all(|e| e.is_zero()) {
            entries[0] = BigRational::one();
        }
        // The precondition fixes x to the exact max magnitude.
        let x = entries.iter().map(|e| e.abs()).max().expect("nonempty");
        let args = vec![
            Value::Int(m.into()),
            corpus::padded_array(&entries),
            Value::Real(corpus::real_of_rational(&x)),
        ];
        let i = run_int(&pivot, &pivot_checked, "PivotIdx", args, case);
        let iu = usize::try_from(&i).expect("index is non-negative");
        assert!(iu < m, "PivotIdx returned {i} beyond {m} live entries");
        assert!(!entries[iu].is_zero(), "PivotIdx picked the zero entry at {i}");
    }
}
