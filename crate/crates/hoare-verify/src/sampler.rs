//! Randomized validity checking of quantifier-free condition bodies by
//! exact evaluation over a fixed function dictionary.
//!
//! A condition is accepted for sampling when stripping its leading
//! universal prefix leaves no quantifier behind and every function
//! symbol is a unary one; anything else is an unsupported shape. Each
//! sample then draws, from a seeded stream,
//!
//!   - one dictionary function per function symbol (the exact test
//!     functions: a linear, an affine, and a cubic, each with one
//!     simple root inside (0, 1)),
//!   - each INTEGER variable uniformly from [-16, 16],
//!   - each REAL variable uniformly from the dyadic grid k/16 with
//!     k in [-64, 64],
//!
//! and evaluates the body in exact rational arithmetic: `cont` is true
//! of every dictionary function, and `uniq(f, a, b)` holds when a < b,
//! f changes sign between a and b, and f has exactly one root in
//! [a, b]. A sample where the body is false is a counterexample and
//! stops the run.
//!
//! Variables pinned by equations are computed instead of drawn: an
//! antecedent conjunct `v = t` (either orientation) with v not in t
//! resolves v from the other variables, so snapshot variables like the
//! variant ghost take their intended value and antecedents are not
//! vacuously false almost everywhere. Every pin equation is still part
//! of the evaluated body, so over-constrained systems fail it honestly.

use crate::formula::Formula;
use crate::term::{pow2_rational, FSort, Term};
use erc_lang::testfn::{self, TestFn};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Samples drawn by default; enough to pin every stored broken variant
/// while staying well under a second per condition.
pub const DEFAULT_SAMPLES: u64 = 10_000;

/// Default stream seed. Frozen so that the stored broken variants are
/// each refuted within [`DEFAULT_SAMPLES`] samples while every stored
/// condition stays clean.
pub const DEFAULT_SEED: u64 = 0;

/// How a formula escapes the sampler.
#[derive(Clone, Debug)]
pub enum SampleError {
    /// A quantifier survives under the universal prefix.
    UnsupportedQuantifierShape { detail: String },
    /// A function symbol is not unary.
    UnsupportedFunction { name: String, arity: usize },
    /// Exact evaluation failed (an out-of-range power of two).
    Eval { detail: String },
}

impl fmt::Display for SampleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleError::UnsupportedQuantifierShape { detail } => {
                write!(f, "unsupported quantifier shape: {detail}")
            }
            SampleError::UnsupportedFunction { name, arity } => {
                write!(f, "function symbol '{name}' has arity {arity}, only unary is sampled")
            }
            SampleError::Eval { detail } => write!(f, "evaluation failed: {detail}"),
        }
    }
}

impl std::error::Error for SampleError {}

/// One falsifying assignment, with everything needed to replay it.
#[derive(Clone, Debug)]
pub struct Counterexample {
    /// Zero-based index of the failing sample.
    pub index: u64,
    /// Drawn and computed variable values, by name.
    pub values: BTreeMap<String, BigRational>,
    /// Dictionary key drawn for each function symbol.
    pub fns: BTreeMap<String, String>,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sample {}:", self.index)?;
        for (name, key) in &self.fns {
            write!(f, " {name} = {key},")?;
        }
        let mut first = true;
        for (name, v) in &self.values {
            if !first {
                write!(f, ",")?;
            }
            first = false;
            write!(f, " {name} = {v}")?;
        }
        Ok(())
    }
}

/// Outcome of a completed sampling run.
#[derive(Clone, Debug)]
pub struct SampleOutcome {
    /// Samples evaluated (including the failing one, if any).
    pub samples: u64,
    /// Samples where the whole body held vacuously, its top-level
    /// antecedent being false.
    pub vacuous: u64,
    pub counterexample: Option<Counterexample>,
}

/// Sampling parameters; the defaults match the stored expectations.
#[derive(Clone, Copy, Debug)]
pub struct SampleConfig {
    pub samples: u64,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { samples: DEFAULT_SAMPLES, seed: DEFAULT_SEED }
    }
}

/// Checks a condition by exact evaluation at sampled points, stopping
/// at the first counterexample.
pub fn sample_check(formula: &Formula, cfg: &SampleConfig) -> Result<SampleOutcome, SampleError> {
    let (prefix, body) = formula.strip_forall_prefix();
    let mut vars: BTreeMap<String, FSort> = prefix.into_iter().collect();
    for (name, sort) in body.free_vars() {
        vars.entry(name).or_insert(sort);
    }
    reject_inner_quantifiers(body)?;
    for (name, arity) in formula.fn_symbols() {
        if arity != 1 {
            return Err(SampleError::UnsupportedFunction { name, arity });
        }
    }
    let fn_names: Vec<String> = formula.fn_symbols().into_keys().collect();
    let pins = resolve_pins(body, &vars);
    let pinned: BTreeSet<&String> = pins.iter().map(|(v, _)| v).collect();
    let drawn: Vec<(&String, FSort)> =
        vars.iter().filter(|(n, _)| !pinned.contains(n)).map(|(n, s)| (n, *s)).collect();
    let dict = testfn::all();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut vacuous = 0u64;
    for index in 0..cfg.samples {
        let mut fns: BTreeMap<String, &TestFn> = BTreeMap::new();
        for name in &fn_names {
            let pick = rng.gen_range(0..dict.len());
            fns.insert(name.clone(), &dict[pick]);
        }
        let mut env: BTreeMap<String, BigRational> = BTreeMap::new();
        for (name, sort) in &drawn {
            let v = match sort {
                FSort::Int => BigRational::from_integer(rng.gen_range(-16i64..=16).into()),
                FSort::Real => {
                    BigRational::new(rng.gen_range(-64i64..=64).into(), BigInt::from(16))
                }
            };
            env.insert((*name).clone(), v);
        }
        let mut consistent = true;
        for (v, t) in &pins {
            let value = eval_term(t, &env, &fns)?;
            if vars[v] == FSort::Int && !value.is_integer() {
                // No integer value of v can satisfy its pin equation,
                // so the antecedent is false for every v: vacuous.
                consistent = false;
                break;
            }
            env.insert(v.clone(), value);
        }
        if !consistent {
            vacuous += 1;
            continue;
        }
        if is_vacuous(body, &env, &fns)? {
            vacuous += 1;
            continue;
        }
        if !eval_formula(body, &env, &fns)? {
            let values = env;
            let fns = fns.into_iter().map(|(n, f)| (n, f.key.to_string())).collect();
            return Ok(SampleOutcome {
                samples: index + 1,
                vacuous,
                counterexample: Some(Counterexample { index, values, fns }),
            });
        }
    }
    Ok(SampleOutcome { samples: cfg.samples, vacuous, counterexample: None })
}

fn reject_inner_quantifiers(body: &Formula) -> Result<(), SampleError> {
    match body {
        Formula::Forall(x, _, _) | Formula::Exists(x, _, _) => {
            Err(SampleError::UnsupportedQuantifierShape {
                detail: format!("a quantifier over '{x}' sits under the universal prefix"),
            })
        }
        Formula::Not(f) => reject_inner_quantifiers(f),
        Formula::And(fs) | Formula::Or(fs) => {
            fs.iter().try_for_each(reject_inner_quantifiers)
        }
        Formula::Implies(a, b) => {
            reject_inner_quantifiers(a)?;
            reject_inner_quantifiers(b)
        }
        _ => Ok(()),
    }
}

/// Pin resolution: scans the antecedent's conjuncts for `v = t`
/// equations, preferring closed right-hand sides, and freezes an
/// evaluation order. A variable used by an accepted pin is locked into
/// the drawn set so the order stays computable.
fn resolve_pins(body: &Formula, vars: &BTreeMap<String, FSort>) -> Vec<(String, Term)> {
    let mut conjuncts = Vec::new();
    if let Formula::Implies(a, _) = body {
        collect_conjuncts(a, &mut conjuncts);
    }
    let mut pins: Vec<(String, Term)> = Vec::new();
    let mut resolved: BTreeSet<String> = BTreeSet::new();
    let mut locked: BTreeSet<String> = BTreeSet::new();
    for closed_only in [true, false] {
        for f in &conjuncts {
            let Formula::EqF(a, b) = f else { continue };
            for (side, other) in [(a, b), (b, a)] {
                let Term::Var(v, _) = side else { continue };
                if !vars.contains_key(v) || resolved.contains(v) || locked.contains(v) {
                    continue;
                }
                let mut tvars = BTreeMap::new();
                other.free_vars(&mut tvars);
                if tvars.contains_key(v) {
                    continue;
                }
                if closed_only && !tvars.is_empty() {
                    continue;
                }
                for u in tvars.keys() {
                    if !resolved.contains(u) {
                        locked.insert(u.clone());
                    }
                }
                resolved.insert(v.clone());
                pins.push((v.clone(), other.clone()));
                break;
            }
        }
    }
    pins
}

fn collect_conjuncts<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    match f {
        Formula::And(fs) => fs.iter().for_each(|g| collect_conjuncts(g, out)),
        other => out.push(other),
    }
}

/// True when the body is an implication whose antecedent is false under
/// the assignment; such samples say nothing about the consequent.
fn is_vacuous(
    body: &Formula,
    env: &BTreeMap<String, BigRational>,
    fns: &BTreeMap<String, &TestFn>,
) -> Result<bool, SampleError> {
    match body {
        Formula::Implies(a, _) => Ok(!eval_formula(a, env, fns)?),
        _ => Ok(false),
    }
}

fn eval_formula(
    f: &Formula,
    env: &BTreeMap<String, BigRational>,
    fns: &BTreeMap<String, &TestFn>,
) -> Result<bool, SampleError> {
    Ok(match f {
        Formula::TrueF => true,
        Formula::Gt(a, b) => eval_term(a, env, fns)? > eval_term(b, env, fns)?,
        Formula::Ge(a, b) => eval_term(a, env, fns)? >= eval_term(b, env, fns)?,
        Formula::EqF(a, b) => eval_term(a, env, fns)? == eval_term(b, env, fns)?,
        Formula::Cont(_) => true,
        Formula::Uniq(name, a, b) => {
            let f = fns
                .get(name)
                .unwrap_or_else(|| panic!("function '{name}' was assigned a dictionary entry"));
            let av = eval_term(a, env, fns)?;
            let bv = eval_term(b, env, fns)?;
            av < bv
                && (f.eval_exact(&av) * f.eval_exact(&bv)).is_negative()
                && f.count_roots_in(&av, &bv) == 1
        }
        Formula::Not(g) => !eval_formula(g, env, fns)?,
        Formula::And(gs) => {
            for g in gs {
                if !eval_formula(g, env, fns)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(gs) => {
            for g in gs {
                if eval_formula(g, env, fns)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Implies(a, b) => !eval_formula(a, env, fns)? || eval_formula(b, env, fns)?,
        Formula::Forall(_, _, _) | Formula::Exists(_, _, _) => {
            unreachable!("quantifiers are rejected before sampling")
        }
    })
}

fn eval_term(
    t: &Term,
    env: &BTreeMap<String, BigRational>,
    fns: &BTreeMap<String, &TestFn>,
) -> Result<BigRational, SampleError> {
    Ok(match t {
        Term::Var(x, _) => env
            .get(x)
            .unwrap_or_else(|| panic!("variable '{x}' was assigned before evaluation"))
            .clone(),
        Term::ILit(n) => BigRational::from_integer(n.clone()),
        Term::RLit(r) => r.clone(),
        Term::Cast(inner) => eval_term(inner, env, fns)?,
        Term::Add(a, b) => eval_term(a, env, fns)? + eval_term(b, env, fns)?,
        Term::Sub(a, b) => eval_term(a, env, fns)? - eval_term(b, env, fns)?,
        Term::Mul(a, b) => eval_term(a, env, fns)? * eval_term(b, env, fns)?,
        Term::Neg(a) => -eval_term(a, env, fns)?,
        Term::Div(a, d) => eval_term(a, env, fns)? / BigRational::from_integer(d.clone()),
        Term::Iota(e) => {
            let ev = eval_term(e, env, fns)?;
            debug_assert!(ev.is_integer(), "iota exponents are INTEGER by sorting");
            match ev.to_integer().to_i64().and_then(pow2_rational) {
                Some(p) => p,
                None => {
                    return Err(SampleError::Eval {
                        detail: format!("iota exponent {ev} is out of sampling range"),
                    })
                }
            }
        }
        Term::App(name, args) => {
            let f = fns
                .get(name)
                .unwrap_or_else(|| panic!("function '{name}' was assigned a dictionary entry"));
            let arg = eval_term(&args[0], env, fns)?;
            f.eval_exact(&arg)
        }
    })
}
