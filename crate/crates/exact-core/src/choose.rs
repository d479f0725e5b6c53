//! Partial comparisons and multivalued choice over lazy booleans.
//!
//! `choose` runs its branches in fair rounds: every undecided branch
//! advances one quantum per round (a comparison drops its precision one
//! notch; a compound guard re-runs under a doubling step cap). The first
//! round that produces true branches resolves the choice, with ties broken
//! by the configured policy. Branches that can never become true (all
//! false, or permanently undecidable within the precision floor) surface
//! as budget exhaustion.

use crate::budget::{Exhaustion, Meter};
use crate::real::RealNum;
use crate::CoreError;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tie-breaking rule when several branches become true in the same round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChoicePolicy {
    LeftFirst,
    RightFirst,
    SeededRandom(u64),
}

impl Default for ChoicePolicy {
    fn default() -> Self {
        ChoicePolicy::LeftFirst
    }
}

/// Policy plus its RNG stream; draws happen only on actual ties, in
/// evaluation order, so runs are reproducible for a fixed seed. Clone
/// snapshots the stream, letting callers roll back abandoned work.
#[derive(Clone)]
pub struct PolicyState {
    policy: ChoicePolicy,
    rng: Option<ChaCha8Rng>,
}

impl PolicyState {
    pub fn new(policy: ChoicePolicy) -> Self {
        let rng = match policy {
            ChoicePolicy::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        PolicyState { policy, rng }
    }

    pub fn policy(&self) -> ChoicePolicy {
        self.policy
    }

    pub fn pick(&mut self, candidates: &[usize]) -> usize {
        match self.policy {
            ChoicePolicy::LeftFirst => candidates[0],
            ChoicePolicy::RightFirst => candidates[candidates.len() - 1],
            ChoicePolicy::SeededRandom(_) => {
                let rng = self.rng.as_mut().expect("seeded policy has rng");
                candidates[rng.gen_range(0..candidates.len())]
            }
        }
    }
}

/// Tie-breaking hook consulted once per resolved choice. Shared-state
/// implementations let branch guards run nested choices without holding a
/// lock across the whole resolution.
pub trait TieBreak {
    fn pick(&self, candidates: &[usize]) -> usize;
}

impl TieBreak for std::sync::Mutex<PolicyState> {
    fn pick(&self, candidates: &[usize]) -> usize {
        self.lock().unwrap().pick(candidates)
    }
}

/// One attempt at deciding a compound guard under a local step cap.
pub enum Attempt {
    Decided(bool),
    /// Ran out of the local cap; worth retrying with more fuel.
    OutOfFuel,
    /// Hit the precision floor or an inner divergence; deeper fuel cannot help.
    Stuck,
}

/// A guard expression evaluated by re-running it under increasing step caps.
/// Re-runs must be deterministic: a run with more fuel resolves every inner
/// decision identically before deciding more.
pub trait GuardThunk: Send {
    fn attempt(&mut self, fuel: u64, meter: &Meter) -> Result<Attempt, CoreError>;
}

/// A boolean that may need refinement to decide, or may never decide.
pub enum LazyBool {
    Const(bool),
    /// Test hook: undecided for exactly n polls, then true.
    TrueAfter(u64),
    /// Test hook: undecided forever.
    Never,
    /// lhs > rhs over exact reals; diverges when they are equal.
    Gt { lhs: RealNum, rhs: RealNum, next_p: i64 },
    /// Re-entrant compound guard with its current fuel allowance.
    Guard { thunk: Box<dyn GuardThunk>, fuel: u64 },
}

impl LazyBool {
    pub fn gt(lhs: RealNum, rhs: RealNum) -> Self {
        LazyBool::Gt { lhs, rhs, next_p: 0 }
    }

    pub fn guard(thunk: Box<dyn GuardThunk>) -> Self {
        LazyBool::Guard { thunk, fuel: INITIAL_FUEL }
    }

    /// Advances one quantum. Poll::Stuck is permanent.
    fn poll(&mut self, meter: &Meter) -> Result<Poll, CoreError> {
        match self {
            LazyBool::Const(b) => Ok(Poll::decided(*b)),
            LazyBool::TrueAfter(n) => {
                if *n == 0 {
                    Ok(Poll::True)
                } else {
                    *n -= 1;
                    Ok(Poll::Undecided)
                }
            }
            LazyBool::Never => Ok(Poll::Undecided),
            LazyBool::Gt { lhs, rhs, next_p } => {
                if meter.require_precision(*next_p).is_err() {
                    return Ok(Poll::Stuck);
                }
                // An operand that itself diverges (unseparable divisor, a
                // limit producer out of precision) makes this comparison
                // permanently undecidable; only step exhaustion and raised
                // errors abort the whole choice.
                let stuck = |e: &CoreError| {
                    matches!(
                        e,
                        CoreError::BudgetExhausted(Exhaustion::Precision)
                            | CoreError::BudgetExhausted(Exhaustion::Stuck)
                    )
                };
                let ia = match lhs.approx(*next_p, meter) {
                    Ok(iv) => iv,
                    Err(e) if stuck(&e) => return Ok(Poll::Stuck),
                    Err(e) => return Err(e),
                };
                let ib = match rhs.approx(*next_p, meter) {
                    Ok(iv) => iv,
                    Err(e) if stuck(&e) => return Ok(Poll::Stuck),
                    Err(e) => return Err(e),
                };
                if ia.lo() > ib.hi() {
                    Ok(Poll::True)
                } else if ia.hi() < ib.lo() {
                    Ok(Poll::False)
                } else if ia.is_point() && ib.is_point() {
                    // Both sides exact and overlapping: they are equal.
                    Ok(Poll::Stuck)
                } else {
                    *next_p -= 1;
                    Ok(Poll::Undecided)
                }
            }
            LazyBool::Guard { thunk, fuel } => match thunk.attempt(*fuel, meter)? {
                Attempt::Decided(b) => Ok(Poll::decided(b)),
                Attempt::OutOfFuel => {
                    *fuel = fuel.saturating_mul(2);
                    Ok(Poll::Undecided)
                }
                Attempt::Stuck => Ok(Poll::Stuck),
            },
        }
    }
}

/// Step cap for a compound guard's first attempt.
pub const INITIAL_FUEL: u64 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Poll {
    True,
    False,
    Undecided,
    Stuck,
}

impl Poll {
    fn decided(b: bool) -> Poll {
        if b { Poll::True } else { Poll::False }
    }
}

/// Branch state at the moment a choice resolved, for tracing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchStatus {
    True,
    False,
    Undecided,
}

impl BranchStatus {
    pub fn letter(&self) -> char {
        match self {
            BranchStatus::True => 'T',
            BranchStatus::False => 'F',
            BranchStatus::Undecided => 'U',
        }
    }
}

/// Resolution of a choice: the picked index and every branch's status.
pub struct ChooseOutcome {
    pub picked: usize,
    pub states: Vec<BranchStatus>,
}

/// Picks the index of a true branch, never one that is false or undecided.
/// Ties within a round go to the policy; a choice none of whose branches
/// can become true exhausts the budget.
pub fn choose(
    branches: Vec<LazyBool>,
    tie: &dyn TieBreak,
    meter: &Meter,
) -> Result<ChooseOutcome, CoreError> {
    assert!(branches.len() >= 2, "choose needs at least two branches");
    let mut branches = branches;
    let mut states: Vec<Poll> = vec![Poll::Undecided; branches.len()];
    loop {
        meter.tick(1)?;
        let mut now_true: Vec<usize> = Vec::new();
        let mut any_open = false;
        for (i, branch) in branches.iter_mut().enumerate() {
            if states[i] != Poll::Undecided {
                continue;
            }
            match branch.poll(meter)? {
                Poll::True => {
                    states[i] = Poll::True;
                    now_true.push(i);
                }
                Poll::False => states[i] = Poll::False,
                Poll::Stuck => states[i] = Poll::Stuck,
                Poll::Undecided => any_open = true,
            }
        }
        if !now_true.is_empty() {
            let picked = tie.pick(&now_true);
            let states = states
                .iter()
                .map(|s| match s {
                    Poll::True => BranchStatus::True,
                    Poll::False => BranchStatus::False,
                    _ => BranchStatus::Undecided,
                })
                .collect();
            return Ok(ChooseOutcome { picked, states });
        }
        if !any_open {
            return Err(CoreError::BudgetExhausted(Exhaustion::Stuck));
        }
    }
}

/// Total-on-inequality comparison: true iff x > y, false iff x < y,
/// budget exhaustion iff x = y (descends to the precision floor).
pub fn gt_partial(x: &RealNum, y: &RealNum, meter: &Meter) -> Result<bool, CoreError> {
    let mut cmp = LazyBool::gt(x.clone(), y.clone());
    loop {
        meter.tick(1)?;
        match cmp.poll(meter)? {
            Poll::True => return Ok(true),
            Poll::False => return Ok(false),
            Poll::Stuck => {
                return Err(CoreError::BudgetExhausted(Exhaustion::Precision))
            }
            Poll::Undecided => {}
        }
    }
}

/// Soft comparison against zero at tolerance 2^p:
/// returns 1 only if x > -2^p, 0 only if x < 2^p. Total for every x.
pub fn soft_gt(
    x: &RealNum,
    p: i64,
    tie: &dyn TieBreak,
    meter: &Meter,
) -> Result<usize, CoreError> {
    let tol = RealNum::iota(p);
    let outcome = choose(
        vec![
            LazyBool::gt(tol.clone(), x.clone()),
            LazyBool::gt(x.clone(), tol.neg()),
        ],
        tie,
        meter,
    )?;
    Ok(outcome.picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::EvalBudget;
    use std::sync::Mutex;

    fn meter() -> Meter {
        Meter::new(EvalBudget::default())
    }

    fn pol(policy: ChoicePolicy) -> Mutex<PolicyState> {
        Mutex::new(PolicyState::new(policy))
    }

    #[test]
    fn gt_resolves_strict_order() {
        let m = meter();
        let a = RealNum::from_rational(1, 3);
        let b = RealNum::from_rational(1, 4);
        assert!(gt_partial(&a, &b, &m).unwrap());
        assert!(!gt_partial(&b, &a, &m).unwrap());
    }

    #[test]
    fn gt_on_equal_values_exhausts() {
        let m = Meter::new(EvalBudget { max_steps: 1_000_000, min_precision: -128 });
        let a = RealNum::from_rational(1, 3);
        let b = RealNum::from_integer(1).div(&RealNum::from_integer(3));
        assert!(matches!(
            gt_partial(&a, &b, &m),
            Err(CoreError::BudgetExhausted(_))
        ));
    }

    #[test]
    fn choose_skips_diverging_branch() {
        let m = meter();
        let pol = pol(ChoicePolicy::LeftFirst);
        // Branch 0 compares equal reals (diverges); branch 1 is true.
        let x = RealNum::from_rational(1, 2);
        let y = RealNum::from_rational(2, 4);
        let out = choose(
            vec![
                LazyBool::gt(x.clone(), y.clone()),
                LazyBool::gt(RealNum::from_integer(1), RealNum::from_integer(0)),
            ],
            &pol,
            &m,
        )
        .unwrap();
        assert_eq!(out.picked, 1);
    }

    #[test]
    fn choose_all_false_exhausts() {
        let m = meter();
        let pol = pol(ChoicePolicy::LeftFirst);
        let out = choose(
            vec![LazyBool::Const(false), LazyBool::Const(false)],
            &pol,
            &m,
        );
        assert!(matches!(out, Err(CoreError::BudgetExhausted(Exhaustion::Stuck))));
    }

    #[test]
    fn choose_progress_with_slow_branch() {
        let m = meter();
        let pol = pol(ChoicePolicy::LeftFirst);
        let out = choose(
            vec![LazyBool::Never, LazyBool::TrueAfter(10_000)],
            &pol,
            &m,
        )
        .unwrap();
        assert_eq!(out.picked, 1);
    }

    #[test]
    fn tie_break_policies() {
        let m = meter();
        let both = || vec![LazyBool::Const(true), LazyBool::Const(true)];
        let left = pol(ChoicePolicy::LeftFirst);
        let right = pol(ChoicePolicy::RightFirst);
        assert_eq!(choose(both(), &left, &m).unwrap().picked, 0);
        assert_eq!(choose(both(), &right, &m).unwrap().picked, 1);
        // Seeded draws are reproducible.
        let run = |seed| {
            let m = meter();
            let pol = pol(ChoicePolicy::SeededRandom(seed));
            (0..20)
                .map(|_| choose(both(), &pol, &m).unwrap().picked)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
        let picks = run(7);
        assert!(picks.contains(&0) && picks.contains(&1), "seeded picks both sides");
    }

    #[test]
    fn soft_gt_total_on_boundary() {
        let m = meter();
        let pol = pol(ChoicePolicy::LeftFirst);
        // x = 2^p exactly: branch 0 diverges, branch 1 must win.
        let p = -3;
        let x = RealNum::iota(p);
        assert_eq!(soft_gt(&x, p, &pol, &m).unwrap(), 1);
        // x = -2^p exactly: branch 1 diverges, branch 0 must win.
        let x = RealNum::iota(p).neg();
        assert_eq!(soft_gt(&x, p, &pol, &m).unwrap(), 0);
        // Far from the band: unique sound answers.
        assert_eq!(soft_gt(&RealNum::from_integer(5), p, &pol, &m).unwrap(), 1);
        assert_eq!(soft_gt(&RealNum::from_integer(-5), p, &pol, &m).unwrap(), 0);
    }
}
