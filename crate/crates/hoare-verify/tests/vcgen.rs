//! Condition generation against the corpus programs: counts, origins,
//! error reporting, and alpha-equivalence with the stored expected
//! conditions.

use hoare_verify::{generate_vcs, parse_vc_file, VcError, VcOrigin};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn goldens_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("goldens")
}

fn load(name: &str) -> erc_lang::Program {
    let path = corpus_dir().join(name);
    let src = std::fs::read_to_string(&path).expect("corpus file is readable");
    let mut prog = erc_lang::parse(&src, name).expect("corpus file parses");
    let externals: BTreeSet<String> = [String::from("f")].into();
    erc_lang::check_program(&mut prog, &externals).expect("corpus file sorts");
    prog
}

#[test]
fn trisection_yields_five_conditions_in_order() {
    let vcs = generate_vcs(&load("trisection.erc")).expect("generates");
    assert_eq!(vcs.len(), 5);
    let origins: Vec<VcOrigin> = vcs.iter().map(|v| v.origin).collect();
    assert_eq!(
        origins,
        vec![
            VcOrigin::Entry,
            VcOrigin::Preservation(Some(0)),
            VcOrigin::Preservation(Some(1)),
            VcOrigin::BranchTotality,
            VcOrigin::Exit,
        ]
    );
    for (i, vc) in vcs.iter().enumerate() {
        assert_eq!(vc.name(), format!("Trisection_vc{i}"));
    }
}

#[test]
fn round_yields_six_conditions_across_both_loops() {
    let vcs = generate_vcs(&load("round.erc")).expect("generates");
    assert_eq!(vcs.len(), 6);
    let origins: Vec<VcOrigin> = vcs.iter().map(|v| v.origin).collect();
    assert_eq!(
        origins,
        vec![
            VcOrigin::Entry,
            VcOrigin::Preservation(None),
            VcOrigin::Bound,
            VcOrigin::Exit,
            VcOrigin::Preservation(None),
            VcOrigin::Exit,
        ]
    );
    // The two loops sit on different lines; their batches stay separate.
    assert_eq!(vcs[1].line, vcs[2].line);
    assert_eq!(vcs[2].line, vcs[3].line);
    assert!(vcs[3].line < vcs[4].line);
    assert_eq!(vcs[4].line, vcs[5].line);
}

#[test]
fn pivot_yields_five_conditions_with_explicit_side_obligations() {
    let vcs = generate_vcs(&load("pivot.erc")).expect("generates");
    assert_eq!(vcs.len(), 5);
    let origins: Vec<VcOrigin> = vcs.iter().map(|v| v.origin).collect();
    assert_eq!(
        origins,
        vec![
            VcOrigin::Entry,
            VcOrigin::Preservation(None),
            VcOrigin::Bound,
            VcOrigin::Exit,
            VcOrigin::GuardTotality,
        ]
    );
    // All are for the annotated index scan; the wrappers contribute none.
    assert!(vcs.iter().all(|v| v.fun == "PivotIdx"));
}

#[test]
fn exp_reports_the_unannotated_inner_loop() {
    match generate_vcs(&load("exp.erc")) {
        Err(VcError::MissingAnnotation { fun, line, what }) => {
            assert_eq!(fun, "Exp");
            assert_eq!(line, 30);
            assert_eq!(what, "invariant");
        }
        other => panic!("expected a missing invariant, got {other:?}"),
    }
}

#[test]
fn annotation_free_programs_yield_nothing() {
    assert!(generate_vcs(&load("gauss.erc")).expect("generates").is_empty());
    assert!(generate_vcs(&load("bisection.erc")).expect("generates").is_empty());
}

#[test]
fn generated_conditions_match_the_stored_expectations() {
    for file in ["trisection.erc", "round.erc"] {
        let vcs = generate_vcs(&load(file)).expect("generates");
        for vc in vcs {
            let path = goldens_dir().join(format!("{}.vc", vc.name()));
            let text = std::fs::read_to_string(&path)
                .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
            let golden = parse_vc_file(&text)
                .unwrap_or_else(|e| panic!("{} does not parse: {e}", path.display()));
            let got = vc.closed();
            let want = golden.closed();
            assert!(
                hoare_verify::alpha_equivalent(&got, &want),
                "{} diverges from {}\n  generated: {}\n  expected:  {}",
                vc.name(),
                path.display(),
                got.normalize(),
                want.normalize(),
            );
        }
    }
}

#[test]
fn every_stored_mutant_differs_from_its_base_condition() {
    let vcs = generate_vcs(&load("trisection.erc")).expect("generates");
    let mutants = [
        ("epsilon_dropped.vc", 1),
        ("invariant_weakened.vc", 4),
        ("definedness_dropped.vc", 0),
        ("bracket_flipped.vc", 1),
        ("variant_flipped.vc", 2),
    ];
    for (file, base) in mutants {
        let path = goldens_dir().join("mutants").join(file);
        let text = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
        let mutant = parse_vc_file(&text)
            .unwrap_or_else(|e| panic!("{} does not parse: {e}", path.display()));
        assert!(
            !hoare_verify::alpha_equivalent(&vcs[base].closed(), &mutant.closed()),
            "{file} is supposed to mutate Trisection_vc{base}"
        );
    }
}
