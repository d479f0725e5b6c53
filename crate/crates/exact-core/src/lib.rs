//! Exact real arithmetic with explicit partiality.
//!
//! Reals are lazy operation graphs refined to dyadic interval enclosures on
//! demand. Comparisons are partial (equality diverges); branching on reals
//! goes through a multivalued `choose` that resolves as soon as any branch
//! is known true. Divergence is realized as budget exhaustion, so every
//! entry point terminates with a value or an error.

mod budget;
mod choose;
mod dyadic;
mod interval;
mod real;

pub use budget::{EvalBudget, Exhaustion, Meter, TickHook};
pub use choose::{
    choose, gt_partial, soft_gt, Attempt, BranchStatus, ChoicePolicy, ChooseOutcome,
    GuardThunk, LazyBool, PolicyState, TieBreak, INITIAL_FUEL,
};
pub use dyadic::Dyadic;
pub use interval::DyadicInterval;
pub use real::{LimitProducer, RealNum};

use std::sync::Arc;

/// Errors surfaced by refinement: exhausted budgets, a producer whose
/// successive enclosures contradict each other, or an error raised by
/// embedded producer code (e.g. an interpreter running inside a limit).
#[derive(Debug, Clone)]
pub enum CoreError {
    BudgetExhausted(Exhaustion),
    Inconsistent,
    Raised(Arc<dyn std::error::Error + Send + Sync + 'static>),
}

impl std::fmt::Display for CoreError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoreError::BudgetExhausted(why) => write!(f, "budget exhausted: {why}"),
            CoreError::Inconsistent => {
                write!(f, "refinements produced disjoint enclosures of the same value")
            }
            CoreError::Raised(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CoreError {}
