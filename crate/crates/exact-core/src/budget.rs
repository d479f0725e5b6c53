//! Step and precision budgets that realize divergence as a run error.

use std::sync::atomic::{AtomicU64, Ordering};

/// Resource bounds for one evaluation. Divergent computations (failed
/// comparisons of equal reals, choices with no true branch) surface as
/// budget exhaustion instead of hanging.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalBudget {
    /// Total refinement/evaluation steps across the whole run.
    pub max_steps: u64,
    /// Comparisons and approximations never descend below this precision.
    pub min_precision: i64,
}

impl Default for EvalBudget {
    fn default() -> Self {
        EvalBudget { max_steps: 10_000_000, min_precision: -4096 }
    }
}

/// Why a run was cut off.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exhaustion {
    /// Global step budget consumed.
    Steps,
    /// A refinement reached the precision floor undecided.
    Precision,
    /// No branch of a choice can ever become true (witnessed divergence).
    Stuck,
}

impl std::fmt::Display for Exhaustion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exhaustion::Steps => write!(f, "step budget exhausted"),
            Exhaustion::Precision => write!(f, "precision floor reached while undecided"),
            Exhaustion::Stuck => write!(f, "no branch can make progress"),
        }
    }
}

/// Charged alongside the global counter on every tick; lets an embedding
/// impose additional local caps (e.g. per-attempt fuel) on all work,
/// including interval refinement.
pub type TickHook = dyn Fn(u64) -> Result<(), crate::CoreError> + Send + Sync;

/// Shared step counter for one evaluation; cheap to tick from anywhere.
pub struct Meter {
    budget: EvalBudget,
    used: AtomicU64,
    hook: Option<Box<TickHook>>,
}

impl std::fmt::Debug for Meter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Meter")
            .field("budget", &self.budget)
            .field("used", &self.used)
            .finish()
    }
}

impl Meter {
    pub fn new(budget: EvalBudget) -> Self {
        Meter { budget, used: AtomicU64::new(0), hook: None }
    }

    pub fn with_hook(budget: EvalBudget, hook: Box<TickHook>) -> Self {
        Meter { budget, used: AtomicU64::new(0), hook: Some(hook) }
    }

    pub fn budget(&self) -> EvalBudget {
        self.budget
    }

    pub fn min_precision(&self) -> i64 {
        self.budget.min_precision
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }

    /// Consumes n steps; errors once the total crosses max_steps.
    pub fn tick(&self, n: u64) -> Result<(), crate::CoreError> {
        let before = self.used.fetch_add(n, Ordering::Relaxed);
        if before.saturating_add(n) > self.budget.max_steps {
            return Err(crate::CoreError::BudgetExhausted(Exhaustion::Steps));
        }
        match &self.hook {
            Some(h) => h(n),
            None => Ok(()),
        }
    }

    /// Errors if precision p is below the floor.
    pub fn require_precision(&self, p: i64) -> Result<(), crate::CoreError> {
        if p < self.budget.min_precision {
            Err(crate::CoreError::BudgetExhausted(Exhaustion::Precision))
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CoreError;

    #[test]
    fn ticking_exhausts() {
        let m = Meter::new(EvalBudget { max_steps: 10, min_precision: -8 });
        assert!(m.tick(10).is_ok());
        assert!(matches!(
            m.tick(1),
            Err(CoreError::BudgetExhausted(Exhaustion::Steps))
        ));
    }

    #[test]
    fn precision_floor() {
        let m = Meter::new(EvalBudget { max_steps: 10, min_precision: -8 });
        assert!(m.require_precision(-8).is_ok());
        assert!(matches!(
            m.require_precision(-9),
            Err(CoreError::BudgetExhausted(Exhaustion::Precision))
        ));
    }
}
