//! Case generation, execution, and judging for the corpus programs.

use crate::manifest::ProgramSpec;
use crate::oracle::{self, pow2, rational_of_dyadic, real_of_rational};
use erc_lang::testfn;
use erc_lang::{
    check_program, parse, run_program, CheckedProgram, ChoicePolicy, EvalBudget, ExternalFns,
    Program, ResultRepr, RunConfig, RunError, RunOutcome, Value,
};
use exact_core::RealNum;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

/// A parsed, sort-checked corpus program plus its manifest entry.
pub struct LoadedProgram {
    pub spec: ProgramSpec,
    pub prog: Program,
    pub checked: CheckedProgram,
}

/// Parses and checks one manifest entry from `dir`.
pub fn load_program(dir: &Path, spec: &ProgramSpec) -> Result<LoadedProgram, String> {
    let path = dir.join(&spec.file);
    let src =
        fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut prog = parse(&src, &spec.file).map_err(|e| e.to_string())?;
    let externals: BTreeSet<String> = [String::from("f")].into();
    let checked = check_program(&mut prog, &externals).map_err(|e| e.to_string())?;
    Ok(LoadedProgram { spec: spec.clone(), prog, checked })
}

/// Deterministic per-case seed derived from the manifest seed.
pub fn case_seed(spec: &ProgramSpec, idx: u64) -> u64 {
    spec.seed ^ idx.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs one seeded case and judges it; `Err` carries the failure story.
pub fn run_case(lp: &LoadedProgram, idx: u64) -> Result<(), String> {
    let seed = case_seed(&lp.spec, idx);
    match lp.spec.check.as_str() {
        "round" => round_case(lp, idx, seed),
        "encode" => encode_case(lp, idx, seed),
        "pivot" => pivot_case(lp, idx, seed),
        "gauss" => gauss_case(lp, idx, seed),
        "trisection" => trisection_case(lp, idx, seed),
        "exp" => exp_case(lp, idx, seed),
        "bisection-diverges" => bisection_case(lp, idx, seed),
        other => Err(format!("unknown check kind '{other}'")),
    }
}

fn config(policy_seed: u64) -> RunConfig {
    RunConfig {
        policy: ChoicePolicy::SeededRandom(policy_seed),
        budget: EvalBudget::default(),
    }
}

fn run(
    lp: &LoadedProgram,
    externals: ExternalFns,
    args: Vec<Value>,
    p: i64,
    policy_seed: u64,
) -> Result<RunOutcome, RunError> {
    run_program(&lp.prog, &lp.checked, externals, &lp.spec.entry, args, p, config(policy_seed))
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn int_result(out: &RunOutcome) -> Result<BigInt, String> {
    match &out.result {
        ResultRepr::Int(k) => Ok(k.clone()),
        other => Err(format!("expected an INTEGER result, got {other}")),
    }
}

fn real_result(out: &RunOutcome) -> Result<(BigRational, BigRational), String> {
    match &out.result {
        ResultRepr::Real(iv) => Ok((rational_of_dyadic(iv.lo()), rational_of_dyadic(iv.hi()))),
        other => Err(format!("expected a REAL result, got {other}")),
    }
}

fn round_case(lp: &LoadedProgram, idx: u64, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = rat(rng.gen_range(-2048..=2048), rng.gen_range(1..=16));
    let args = vec![Value::Real(real_of_rational(&x))];
    let out = run(lp, ExternalFns::new(), args, 0, seed)
        .map_err(|e| format!("case {idx}: Round({x}) failed: {e}"))?;
    let k = int_result(&out)?;
    let diff = (&x - BigRational::from_integer(k.clone())).abs();
    if diff < BigRational::one() {
        Ok(())
    } else {
        Err(format!("case {idx}: Round({x}) = {k}, off by {diff}"))
    }
}

fn encode_case(lp: &LoadedProgram, idx: u64, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = rat(rng.gen_range(-256..=256), rng.gen_range(1..=16));
    let n: i64 = rng.gen_range(0..=12);
    let args = vec![Value::Real(real_of_rational(&x)), Value::Int(n.into())];
    let out = run(lp, ExternalFns::new(), args, 0, seed)
        .map_err(|e| format!("case {idx}: Encode({x}, {n}) failed: {e}"))?;
    let k = int_result(&out)?;
    let diff = (&x * pow2(n) - BigRational::from_integer(k.clone())).abs();
    if diff < BigRational::one() {
        Ok(())
    } else {
        Err(format!("case {idx}: Encode({x}, {n}) = {k}, off by {diff}"))
    }
}

/// Nine-slot array argument with the leading entries live.
pub fn padded_array(entries: &[BigRational]) -> Value {
    let mut xs: Vec<RealNum> = entries.iter().map(real_of_rational).collect();
    while xs.len() < 9 {
        xs.push(RealNum::from_bigint(BigInt::zero()));
    }
    Value::RealArr(xs)
}

fn pivot_case(lp: &LoadedProgram, idx: u64, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m: usize = rng.gen_range(1..=9);
    let mut entries: Vec<BigRational> =
        (0..m).map(|_| rat(rng.gen_range(-64..=64), 16)).collect();
    if entries.iter().all(|e| e.is_zero()) {
        let j = rng.gen_range(0..m);
        entries[j] = BigRational::one();
    }
    let args = vec![Value::Int(m.into()), padded_array(&entries)];
    let out = run(lp, ExternalFns::new(), args, 0, seed)
        .map_err(|e| format!("case {idx}: Pivot over {m} entries failed: {e}"))?;
    let i = int_result(&out)?;
    let iu = usize::try_from(&i).map_err(|_| format!("case {idx}: negative index {i}"))?;
    if iu >= m {
        return Err(format!("case {idx}: index {i} out of range 0..{m}"));
    }
    if entries[iu].is_zero() {
        return Err(format!("case {idx}: picked the zero entry at {i}"));
    }
    Ok(())
}

fn gauss_case(lp: &LoadedProgram, idx: u64, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d: usize = if lp.spec.entry == "Gauss2" { 2 } else { 3 };
    let r: usize = rng.gen_range(0..d);
    // A rank-r matrix as a sum of r outer products on the quarter grid;
    // resample on the rare accidental rank drop.
    let a: Vec<Vec<BigRational>> = loop {
        let mut acc = vec![vec![BigRational::zero(); d]; d];
        for _ in 0..r {
            let u: Vec<BigRational> = (0..d).map(|_| rat(rng.gen_range(-8..=8), 4)).collect();
            let v: Vec<BigRational> = (0..d).map(|_| rat(rng.gen_range(-8..=8), 4)).collect();
            for i in 0..d {
                for j in 0..d {
                    let add = &u[i] * &v[j];
                    acc[i][j] += add;
                }
            }
        }
        if oracle::exact_rank(&acc) == r {
            break acc;
        }
    };
    let flat: Vec<RealNum> =
        a.iter().flat_map(|row| row.iter().map(real_of_rational)).collect();
    let p = lp.spec.precisions[0];
    let args = vec![Value::RealArr(flat), Value::Int(r.into())];
    let out = run(lp, ExternalFns::new(), args, p, seed)
        .map_err(|e| format!("case {idx}: {} rank {r} failed: {e}", lp.spec.entry))?;
    let ResultRepr::RealVec(ivs) = &out.result else {
        return Err(format!("case {idx}: expected a REAL vector, got {}", out.result));
    };
    let mids: Vec<BigRational> = ivs.iter().map(oracle::rational_mid).collect();
    if !mids.iter().any(|v| v.abs() >= rat(1, 2)) {
        return Err(format!("case {idx}: kernel vector lost its planted coordinate"));
    }
    let bound = pow2(p + 5);
    for i in 0..d {
        let resid: BigRational =
            (0..d).map(|j| &a[i][j] * &mids[j]).fold(BigRational::zero(), |s, t| s + t);
        if resid.abs() > bound {
            return Err(format!(
                "case {idx}: row {i} residual {} exceeds 2^{}",
                resid.abs(),
                p + 5
            ));
        }
    }
    Ok(())
}

fn trisection_case(lp: &LoadedProgram, idx: u64, seed: u64) -> Result<(), String> {
    let np = lp.spec.precisions.len();
    let p = lp.spec.precisions[idx as usize % np];
    let key = &lp.spec.functions[(idx as usize / np) % lp.spec.functions.len()];
    let tf = testfn::by_key(key).ok_or_else(|| format!("unknown test function '{key}'"))?;
    let mut ext = ExternalFns::new();
    ext.insert("f", tf.external());
    let out = run(lp, ext, vec![], p, seed)
        .map_err(|e| format!("case {idx}: Trisection(f={key}, p={p}) failed: {e}"))?;
    let (lo, hi) = real_result(&out)?;
    if &hi - &lo > pow2(p) {
        return Err(format!("case {idx}: enclosure wider than 2^{p}: [{lo}, {hi}]"));
    }
    let (rlo, rhi) = tf.root_bracket(&BigRational::zero(), &BigRational::one());
    if rhi < lo || hi < rlo {
        return Err(format!(
            "case {idx}: result [{lo}, {hi}] misses the root of {key} near [{rlo}, {rhi}]"
        ));
    }
    Ok(())
}

fn exp_case(lp: &LoadedProgram, idx: u64, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = if idx == 0 { BigRational::one() } else { rat(rng.gen_range(0..=64), 32) };
    let p = lp.spec.precisions[0];
    let args = vec![Value::Real(real_of_rational(&x))];
    let out =
        run(lp, ExternalFns::new(), args, p, seed).map_err(|e| format!("case {idx}: Exp({x}) failed: {e}"))?;
    let (lo, hi) = real_result(&out)?;
    if &hi - &lo > pow2(p) {
        return Err(format!("case {idx}: enclosure wider than 2^{p}: [{lo}, {hi}]"));
    }
    let (olo, ohi) = oracle::exp_bracket(&x, 36, 192);
    if ohi < lo || hi < olo {
        return Err(format!(
            "case {idx}: Exp({x}) in [{lo}, {hi}] misses the oracle bracket [{olo}, {ohi}]"
        ));
    }
    Ok(())
}

fn bisection_case(lp: &LoadedProgram, idx: u64, seed: u64) -> Result<(), String> {
    // The root of the linear test function is 1/2, the first midpoint.
    let linear = testfn::by_key("linear").expect("linear test function");
    let mut ext = ExternalFns::new();
    ext.insert("f", linear.external());
    let p = lp.spec.precisions[0];
    match run(lp, ext, vec![], p, seed) {
        Err(RunError::Budget(_)) => {}
        Ok(_) => return Err(format!("case {idx}: midpoint sign test unexpectedly decided")),
        Err(e) => return Err(format!("case {idx}: expected budget exhaustion, got: {e}")),
    }
    // Off the midpoint (root 1/3) the same program works.
    let affine = testfn::by_key("affine").expect("affine test function");
    let mut ext = ExternalFns::new();
    ext.insert("f", affine.external());
    let out = run(lp, ext, vec![], p, seed)
        .map_err(|e| format!("case {idx}: Bisection(f=affine) failed: {e}"))?;
    let (lo, hi) = real_result(&out)?;
    let (rlo, rhi) = affine.root_bracket(&BigRational::zero(), &BigRational::one());
    if rhi < lo || hi < rlo {
        return Err(format!("case {idx}: bisection result [{lo}, {hi}] misses 1/3"));
    }
    Ok(())
}
