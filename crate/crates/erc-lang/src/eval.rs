//! Tree-walking evaluator.
//!
//! Execution model:
//! - INTEGER computation is strict over unbounded integers.
//! - REAL computation builds lazy operation graphs; numeric work happens
//!   only when a comparison or the final result forces refinement.
//! - A call to a scalar-REAL function does not run the body. It becomes a
//!   limit node whose producer runs the body with the precision parameter
//!   bound to the refinement request, so callers never pick a precision.
//! - `choose` branches advance in fair rounds. A branch that is a plain
//!   REAL comparison refines one precision notch per round; any other
//!   branch re-runs from scratch under a doubling step cap (its fuel),
//!   which keeps one diverging branch from starving the others.
//!
//! Abandoned guard attempts roll back their trace events and policy draws,
//! so the final trace lists exactly the decisions the run was built from,
//! in resolution order, and is byte-identical across runs for a fixed
//! program, budget, policy and seed.

use crate::ast::*;
use crate::check::{CheckedProgram, FnSig};
use crate::trace::{Site, TraceBuf, TraceRecord};
use exact_core::{
    choose, gt_partial, Attempt, CoreError, EvalBudget, Exhaustion, GuardThunk, LazyBool,
    Meter, PolicyState, RealNum,
};
pub use exact_core::ChoicePolicy;
use exact_core::DyadicInterval;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};

/// Deepest allowed chain of nested strict calls.
pub const RECURSION_LIMIT: u32 = 512;

/// Largest magnitude accepted as an `iota` exponent.
pub const MAX_IOTA_EXP: i64 = 1 << 24;

/// Runtime value: scalars or fixed-length arrays of them.
#[derive(Clone)]
pub enum Value {
    Int(BigInt),
    Real(RealNum),
    IntArr(Vec<BigInt>),
    RealArr(Vec<RealNum>),
}

impl Value {
    pub fn matches(&self, ty: &Type) -> bool {
        match (self, ty.sort, ty.len) {
            (Value::Int(_), Sort::Int, None) => true,
            (Value::Real(_), Sort::Real, None) => true,
            (Value::IntArr(xs), Sort::Int, Some(n)) => xs.len() == n,
            (Value::RealArr(xs), Sort::Real, Some(n)) => xs.len() == n,
            _ => false,
        }
    }

    fn describe(&self) -> String {
        match self {
            Value::Int(_) => "INTEGER".into(),
            Value::Real(_) => "REAL".into(),
            Value::IntArr(xs) => format!("INTEGER[{}]", xs.len()),
            Value::RealArr(xs) => format!("REAL[{}]", xs.len()),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "Int({n})"),
            Value::IntArr(xs) => write!(f, "IntArr({xs:?})"),
            Value::Real(_) => write!(f, "Real(..)"),
            Value::RealArr(xs) => write!(f, "RealArr(len {})", xs.len()),
        }
    }
}

/// External REAL -> REAL function bound by the harness (test functions,
/// oracles). Must build a graph without forcing refinement.
pub type ExternalFn = Arc<dyn Fn(&RealNum) -> RealNum + Send + Sync>;

/// Named external functions visible to a program.
#[derive(Clone, Default)]
pub struct ExternalFns {
    map: BTreeMap<String, ExternalFn>,
}

impl ExternalFns {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, f: ExternalFn) {
        self.map.insert(name.to_string(), f);
    }

    pub fn get(&self, name: &str) -> Option<&ExternalFn> {
        self.map.get(name)
    }

    /// Name set in the form the sort checker expects.
    pub fn names(&self) -> BTreeSet<String> {
        self.map.keys().cloned().collect()
    }
}

/// Execution limits and choice policy for one run.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunConfig {
    pub policy: ChoicePolicy,
    pub budget: EvalBudget,
}

/// Why a run stopped without a value.
#[derive(Debug, Clone)]
pub enum RunError {
    Budget(Exhaustion),
    /// A refinement contradicted an earlier one; some function body broke
    /// its accuracy promise.
    Inconsistent,
    /// Internal signal: a guard attempt ran out of the step cap at the
    /// given nesting level. Never escapes a finished run.
    FuelOut(usize),
    OutOfBounds { span: Span, len: usize, idx: BigInt },
    NotBoolean { span: Span },
    IotaRange { span: Span },
    MissingFunction(String),
    MissingReturn(String),
    BadEntry(String),
    RecursionLimit(String),
    Internal(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Budget(why) => write!(f, "budget exhausted: {why}"),
            RunError::Inconsistent => {
                write!(f, "refinements produced disjoint enclosures of the same value")
            }
            RunError::FuelOut(lvl) => write!(f, "guard attempt at level {lvl} out of fuel"),
            RunError::OutOfBounds { span, len, idx } => write!(
                f,
                "{}:{}: index {idx} out of bounds for length {len}",
                span.line, span.col
            ),
            RunError::NotBoolean { span } => write!(
                f,
                "{}:{}: guard evaluated to a value other than 0 or 1",
                span.line, span.col
            ),
            RunError::IotaRange { span } => write!(
                f,
                "{}:{}: iota exponent exceeds {MAX_IOTA_EXP} in magnitude",
                span.line, span.col
            ),
            RunError::MissingFunction(name) => write!(f, "call to unknown function '{name}'"),
            RunError::MissingReturn(name) => {
                write!(f, "function '{name}' finished without RETURN")
            }
            RunError::BadEntry(msg) => write!(f, "{msg}"),
            RunError::RecursionLimit(name) => {
                write!(f, "call depth limit reached in '{name}'")
            }
            RunError::Internal(msg) => write!(f, "internal evaluator error: {msg}"),
        }
    }
}

impl std::error::Error for RunError {}

fn to_core(e: RunError) -> CoreError {
    match e {
        RunError::Budget(why) => CoreError::BudgetExhausted(why),
        RunError::Inconsistent => CoreError::Inconsistent,
        other => CoreError::Raised(Arc::new(other)),
    }
}

fn from_core(e: CoreError) -> RunError {
    match e {
        CoreError::BudgetExhausted(why) => RunError::Budget(why),
        CoreError::Inconsistent => RunError::Inconsistent,
        CoreError::Raised(err) => match err.downcast_ref::<RunError>() {
            Some(re) => re.clone(),
            None => RunError::Internal(err.to_string()),
        },
    }
}

/// Result of a finished run, rendered at the requested precision: REAL
/// values become interval enclosures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResultRepr {
    Int(BigInt),
    Real(DyadicInterval),
    IntVec(Vec<BigInt>),
    RealVec(Vec<DyadicInterval>),
}

impl fmt::Display for ResultRepr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, xs: &[T]) -> fmt::Result {
            write!(f, "[")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")
        }
        match self {
            ResultRepr::Int(n) => write!(f, "{n}"),
            ResultRepr::Real(iv) => write!(f, "{iv}"),
            ResultRepr::IntVec(xs) => list(f, xs),
            ResultRepr::RealVec(xs) => list(f, xs),
        }
    }
}

/// A finished run: the raw value, its rendering, the decision trace and
/// how many steps the whole run consumed.
#[derive(Debug)]
pub struct RunOutcome {
    pub value: Value,
    pub result: ResultRepr,
    pub trace: Vec<TraceRecord>,
    pub steps: u64,
}

enum Flow {
    Normal,
    Return(Value),
}

type Env = BTreeMap<String, Value>;

struct Inner {
    prog: Program,
    sigs: BTreeMap<String, FnSig>,
    externals: ExternalFns,
    meter: Meter,
    policy: Arc<Mutex<PolicyState>>,
    trace: Mutex<TraceBuf>,
    fuel: Arc<Mutex<Vec<u64>>>,
    depth: AtomicU32,
}

/// Shared evaluator state for one run. Clones share everything, which is
/// what lets limit producers and guard thunks re-enter the interpreter.
#[derive(Clone)]
pub struct Machine {
    inner: Arc<Inner>,
}

impl Machine {
    /// Builds a machine for a checked program. Checking must have happened
    /// with the same external name set.
    pub fn new(prog: Program, checked: &CheckedProgram, externals: ExternalFns, cfg: RunConfig) -> Self {
        let fuel: Arc<Mutex<Vec<u64>>> = Arc::new(Mutex::new(Vec::new()));
        let hook_fuel = fuel.clone();
        let meter = Meter::with_hook(
            cfg.budget,
            Box::new(move |n| {
                let mut stack = hook_fuel.lock().unwrap();
                let mut exhausted = None;
                for (lvl, rem) in stack.iter_mut().enumerate() {
                    if *rem < n {
                        if exhausted.is_none() {
                            exhausted = Some(lvl);
                        }
                        *rem = 0;
                    } else {
                        *rem -= n;
                    }
                }
                match exhausted {
                    Some(lvl) => Err(to_core(RunError::FuelOut(lvl))),
                    None => Ok(()),
                }
            }),
        );
        Machine {
            inner: Arc::new(Inner {
                prog,
                sigs: checked.sigs.clone(),
                externals,
                meter,
                policy: Arc::new(Mutex::new(PolicyState::new(cfg.policy))),
                trace: Mutex::new(TraceBuf::default()),
                fuel,
                depth: AtomicU32::new(0),
            }),
        }
    }

    /// Runs the entry function. For a scalar-REAL entry the caller passes
    /// the visible arguments only; the precision parameter is closed by a
    /// limit, exactly as at interior call sites, and the result is the
    /// limit's enclosure at width <= 2^p. Other entries run strictly and
    /// REAL components of the result are enclosed at width <= 2^p.
    pub fn run_entry(&self, entry: &str, args: Vec<Value>, p: i64) -> Result<RunOutcome, RunError> {
        let sig = self
            .inner
            .sigs
            .get(entry)
            .ok_or_else(|| RunError::BadEntry(format!("unknown entry function '{entry}'")))?
            .clone();
        let visible = sig.visible_params();
        if args.len() != visible.len() {
            return Err(RunError::BadEntry(format!(
                "entry '{entry}' expects {} argument(s), got {}",
                visible.len(),
                args.len()
            )));
        }
        for (i, (v, ty)) in args.iter().zip(visible).enumerate() {
            if !v.matches(ty) {
                return Err(RunError::BadEntry(format!(
                    "argument {} of '{entry}' should be {}, got {}",
                    i + 1,
                    ty,
                    v.describe()
                )));
            }
        }
        let value = if sig.precision_param {
            Value::Real(self.limit_call(entry.to_string(), args))
        } else {
            self.call_function(entry, args)?
        };
        let result = self.render(&value, p)?;
        let trace = self.inner.trace.lock().unwrap().snapshot();
        let steps = self.inner.meter.used();
        Ok(RunOutcome { value, result, trace, steps })
    }

    /// Calls a defined function strictly with a full argument list (for a
    /// scalar-REAL function that includes the precision argument).
    pub fn call_function(&self, name: &str, args: Vec<Value>) -> Result<Value, RunError> {
        let fun = self
            .inner
            .prog
            .function(name)
            .ok_or_else(|| RunError::MissingFunction(name.to_string()))?;
        if args.len() != fun.params.len() {
            return Err(RunError::BadEntry(format!(
                "'{name}' takes {} argument(s), got {}",
                fun.params.len(),
                args.len()
            )));
        }
        for (param, v) in fun.params.iter().zip(&args) {
            if !v.matches(&param.ty) {
                return Err(RunError::BadEntry(format!(
                    "parameter '{}' of '{name}' is {}, got {}",
                    param.name,
                    param.ty,
                    v.describe()
                )));
            }
        }
        if self.inner.depth.fetch_add(1, Ordering::SeqCst) >= RECURSION_LIMIT {
            self.inner.depth.fetch_sub(1, Ordering::SeqCst);
            return Err(RunError::RecursionLimit(name.to_string()));
        }
        let mut env: Env = fun
            .params
            .iter()
            .map(|p| p.name.clone())
            .zip(args)
            .collect();
        let res = self.exec_block(&mut env, &fun.body);
        self.inner.depth.fetch_sub(1, Ordering::SeqCst);
        match res? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => Err(RunError::MissingReturn(name.to_string())),
        }
    }

    /// Wraps a scalar-REAL function call in a limit node: refinement at
    /// precision q runs the body with the precision parameter bound to q.
    fn limit_call(&self, name: String, args: Vec<Value>) -> RealNum {
        let mach = self.clone();
        RealNum::limit(Arc::new(move |q: i64, _meter: &Meter| {
            let mut full = Vec::with_capacity(args.len() + 1);
            full.push(Value::Int(BigInt::from(q)));
            full.extend(args.iter().cloned());
            match mach.call_function(&name, full) {
                Ok(Value::Real(r)) => Ok(r),
                Ok(v) => Err(to_core(RunError::Internal(format!(
                    "'{name}' returned {} instead of REAL",
                    v.describe()
                )))),
                Err(e) => Err(to_core(e)),
            }
        }))
    }

    fn step(&self, n: u64) -> Result<(), RunError> {
        self.inner.meter.tick(n).map_err(from_core)
    }

    fn site(&self, span: Span) -> Site {
        Site { file: self.inner.prog.file.clone(), line: span.line }
    }

    fn push_fuel(&self, fuel: u64) -> usize {
        let mut stack = self.inner.fuel.lock().unwrap();
        stack.push(fuel);
        stack.len() - 1
    }

    fn pop_fuel(&self, level: usize) {
        let mut stack = self.inner.fuel.lock().unwrap();
        debug_assert_eq!(stack.len(), level + 1, "unbalanced fuel stack");
        stack.pop();
    }

    fn exec_block(&self, env: &mut Env, block: &Block) -> Result<Flow, RunError> {
        for stmt in &block.0 {
            if let Flow::Return(v) = self.exec_stmt(env, stmt)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(&self, env: &mut Env, stmt: &Stmt) -> Result<Flow, RunError> {
        self.step(1)?;
        match &stmt.kind {
            StmtKind::Decl { ty, name, init } => {
                let v = match init {
                    Some(e) => self.eval_expr(env, e)?,
                    None => default_value(ty),
                };
                env.insert(name.clone(), v);
                Ok(Flow::Normal)
            }
            StmtKind::Assign { target, value } => {
                let v = self.eval_expr(env, value)?;
                match &target.index {
                    None => {
                        env.insert(target.name.clone(), v);
                    }
                    Some(idx_expr) => {
                        let idx = self.eval_int(env, idx_expr)?;
                        let span = idx_expr.span;
                        let slot = env
                            .get_mut(&target.name)
                            .ok_or_else(|| RunError::Internal(format!("unbound '{}'", target.name)))?;
                        match slot {
                            Value::IntArr(xs) => {
                                let i = index_in(&idx, xs.len(), span)?;
                                xs[i] = expect_int(v)?;
                            }
                            Value::RealArr(xs) => {
                                let i = index_in(&idx, xs.len(), span)?;
                                xs[i] = expect_real(v)?;
                            }
                            _ => {
                                return Err(RunError::Internal(format!(
                                    "'{}' is not an array",
                                    target.name
                                )))
                            }
                        }
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::If { guard, then_blk, else_blk } => {
                if self.eval_bool(env, guard)? {
                    self.exec_block(env, then_blk)
                } else {
                    match else_blk {
                        Some(b) => self.exec_block(env, b),
                        None => Ok(Flow::Normal),
                    }
                }
            }
            StmtKind::While { guard, body, .. } => loop {
                if !self.eval_bool(env, guard)? {
                    return Ok(Flow::Normal);
                }
                if let Flow::Return(v) = self.exec_block(env, body)? {
                    return Ok(Flow::Return(v));
                }
            },
            StmtKind::Return(e) => Ok(Flow::Return(self.eval_expr(env, e)?)),
        }
    }

    fn eval_expr(&self, env: &Env, e: &Expr) -> Result<Value, RunError> {
        self.step(1)?;
        match &e.kind {
            ExprKind::Lit(n) => match e.sort() {
                Sort::Int => Ok(Value::Int(n.clone())),
                Sort::Real => Ok(Value::Real(RealNum::from_bigint(n.clone()))),
            },
            ExprKind::Var(name) => env
                .get(name)
                .cloned()
                .ok_or_else(|| RunError::Internal(format!("unbound '{name}'"))),
            ExprKind::Index(name, idx_expr) => {
                let idx = self.eval_int(env, idx_expr)?;
                match env.get(name) {
                    Some(Value::IntArr(xs)) => {
                        let i = index_in(&idx, xs.len(), idx_expr.span)?;
                        Ok(Value::Int(xs[i].clone()))
                    }
                    Some(Value::RealArr(xs)) => {
                        let i = index_in(&idx, xs.len(), idx_expr.span)?;
                        Ok(Value::Real(xs[i].clone()))
                    }
                    _ => Err(RunError::Internal(format!("'{name}' is not an array"))),
                }
            }
            ExprKind::Bin(op, l, r) => match e.sort() {
                Sort::Int => {
                    let a = self.eval_int(env, l)?;
                    let b = self.eval_int(env, r)?;
                    match op {
                        BinOp::Add => Ok(Value::Int(a + b)),
                        BinOp::Sub => Ok(Value::Int(a - b)),
                        BinOp::Mul | BinOp::Div => Err(RunError::Internal(
                            "INTEGER * and / survive elaboration".into(),
                        )),
                    }
                }
                Sort::Real => {
                    let a = self.eval_real(env, l)?;
                    let b = self.eval_real(env, r)?;
                    let v = match op {
                        BinOp::Add => a.add(&b),
                        BinOp::Sub => a.sub(&b),
                        BinOp::Mul => a.mul(&b),
                        // Division is lazy too; an unseparable divisor
                        // surfaces when the quotient is refined.
                        BinOp::Div => a.div(&b),
                    };
                    Ok(Value::Real(v))
                }
            },
            ExprKind::Neg(x) => match self.eval_expr(env, x)? {
                Value::Int(n) => Ok(Value::Int(-n)),
                Value::Real(r) => Ok(Value::Real(r.neg())),
                v => Err(RunError::Internal(format!("negating {}", v.describe()))),
            },
            ExprKind::Gt(l, r) => match l.sort() {
                Sort::Int => {
                    let a = self.eval_int(env, l)?;
                    let b = self.eval_int(env, r)?;
                    Ok(bool_value(a > b))
                }
                Sort::Real => {
                    let a = self.eval_real(env, l)?;
                    let b = self.eval_real(env, r)?;
                    let result =
                        gt_partial(&a, &b, &self.inner.meter).map_err(from_core)?;
                    self.inner
                        .trace
                        .lock()
                        .unwrap()
                        .push(TraceRecord::Cmp { site: self.site(e.span), result });
                    Ok(bool_value(result))
                }
            },
            ExprKind::Eq(l, r) => {
                let a = self.eval_int(env, l)?;
                let b = self.eval_int(env, r)?;
                Ok(bool_value(a == b))
            }
            ExprKind::Iota(n_expr) => {
                let n = self.eval_int(env, n_expr)?;
                match n.to_i64() {
                    Some(p) if p.abs() <= MAX_IOTA_EXP => Ok(Value::Real(RealNum::iota(p))),
                    _ => Err(RunError::IotaRange { span: e.span }),
                }
            }
            ExprKind::Choose(branches) => {
                let picked = self.eval_choose(env, e.span, branches)?;
                Ok(Value::Int(BigInt::from(picked)))
            }
            ExprKind::Cond(guard, then_e, else_e) => {
                if self.eval_bool(env, guard)? {
                    self.eval_expr(env, then_e)
                } else {
                    self.eval_expr(env, else_e)
                }
            }
            ExprKind::Call(name, args) => self.eval_call(env, name, args),
        }
    }

    fn eval_call(&self, env: &Env, name: &str, args: &[Expr]) -> Result<Value, RunError> {
        if let Some(ext) = self.inner.externals.get(name) {
            let x = self.eval_real(env, &args[0])?;
            return Ok(Value::Real(ext(&x)));
        }
        let sig = self
            .inner
            .sigs
            .get(name)
            .ok_or_else(|| RunError::MissingFunction(name.to_string()))?;
        let precision_param = sig.precision_param;
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval_expr(env, a)?);
        }
        if precision_param {
            Ok(Value::Real(self.limit_call(name.to_string(), vals)))
        } else {
            self.call_function(name, vals)
        }
    }

    /// Resolves a multivalued choice. Plain REAL comparisons refine in
    /// place; everything else re-runs as a guard thunk whose trace events
    /// and policy draws are kept only if that branch is picked.
    fn eval_choose(&self, env: &Env, span: Span, branches: &[Expr]) -> Result<usize, RunError> {
        let mut lazy = Vec::with_capacity(branches.len());
        let mut slots: Vec<Option<Arc<Mutex<Vec<TraceRecord>>>>> = Vec::new();
        for b in branches {
            match &b.kind {
                ExprKind::Gt(l, r) if l.sort() == Sort::Real => {
                    let a = self.eval_real(env, l)?;
                    let c = self.eval_real(env, r)?;
                    lazy.push(LazyBool::gt(a, c));
                    slots.push(None);
                }
                _ if !has_dynamic(b) => {
                    let v = self.eval_bool(env, b)?;
                    lazy.push(LazyBool::Const(v));
                    slots.push(None);
                }
                _ => {
                    let slot = Arc::new(Mutex::new(Vec::new()));
                    lazy.push(LazyBool::guard(Box::new(ExprGuard {
                        mach: self.clone(),
                        env: env.clone(),
                        expr: b.clone(),
                        slot: slot.clone(),
                    })));
                    slots.push(Some(slot));
                }
            }
        }
        let outcome =
            choose(lazy, &*self.inner.policy, &self.inner.meter).map_err(from_core)?;
        let mut trace = self.inner.trace.lock().unwrap();
        if let Some(slot) = &slots[outcome.picked] {
            trace.extend(std::mem::take(&mut *slot.lock().unwrap()));
        }
        trace.push(TraceRecord::Choose {
            site: self.site(span),
            states: outcome.states,
            picked: outcome.picked,
        });
        Ok(outcome.picked)
    }

    fn eval_bool(&self, env: &Env, e: &Expr) -> Result<bool, RunError> {
        match self.eval_expr(env, e)? {
            Value::Int(n) if n.is_zero() => Ok(false),
            Value::Int(n) if n.is_one() => Ok(true),
            _ => Err(RunError::NotBoolean { span: e.span }),
        }
    }

    fn eval_int(&self, env: &Env, e: &Expr) -> Result<BigInt, RunError> {
        match self.eval_expr(env, e)? {
            Value::Int(n) => Ok(n),
            v => Err(RunError::Internal(format!("expected INTEGER, got {}", v.describe()))),
        }
    }

    fn eval_real(&self, env: &Env, e: &Expr) -> Result<RealNum, RunError> {
        match self.eval_expr(env, e)? {
            Value::Real(r) => Ok(r),
            v => Err(RunError::Internal(format!("expected REAL, got {}", v.describe()))),
        }
    }

    fn render(&self, v: &Value, p: i64) -> Result<ResultRepr, RunError> {
        let approx = |r: &RealNum| r.approx(p, &self.inner.meter).map_err(from_core);
        Ok(match v {
            Value::Int(n) => ResultRepr::Int(n.clone()),
            Value::Real(r) => ResultRepr::Real(approx(r)?),
            Value::IntArr(xs) => ResultRepr::IntVec(xs.clone()),
            Value::RealArr(xs) => {
                let mut ivs = Vec::with_capacity(xs.len());
                for r in xs {
                    ivs.push(approx(r)?);
                }
                ResultRepr::RealVec(ivs)
            }
        })
    }
}

/// Guard branch that re-runs an expression under a step cap. Trace events
/// of a decided attempt are parked in `slot`; the enclosing choice appends
/// them only if this branch wins.
struct ExprGuard {
    mach: Machine,
    env: Env,
    expr: Expr,
    slot: Arc<Mutex<Vec<TraceRecord>>>,
}

impl ExprGuard {
    fn undo(&self, policy_snapshot: PolicyState) {
        self.mach.inner.trace.lock().unwrap().rollback();
        *self.mach.inner.policy.lock().unwrap() = policy_snapshot;
    }
}

impl GuardThunk for ExprGuard {
    fn attempt(&mut self, fuel: u64, _meter: &Meter) -> Result<Attempt, CoreError> {
        let m = self.mach.clone();
        let level = m.push_fuel(fuel);
        let policy_snapshot = m.inner.policy.lock().unwrap().clone();
        m.inner.trace.lock().unwrap().mark();
        let res = m.eval_expr(&self.env, &self.expr);
        m.pop_fuel(level);
        match res {
            Ok(Value::Int(n)) if n.is_zero() || n.is_one() => {
                let events = m.inner.trace.lock().unwrap().extract();
                *self.slot.lock().unwrap() = events;
                Ok(Attempt::Decided(n.is_one()))
            }
            Ok(_) => {
                self.undo(policy_snapshot);
                Err(to_core(RunError::NotBoolean { span: self.expr.span }))
            }
            Err(RunError::FuelOut(lvl)) if lvl == level => {
                self.undo(policy_snapshot);
                Ok(Attempt::OutOfFuel)
            }
            Err(RunError::Budget(Exhaustion::Precision)) | Err(RunError::Budget(Exhaustion::Stuck)) => {
                self.undo(policy_snapshot);
                Ok(Attempt::Stuck)
            }
            Err(e) => {
                self.undo(policy_snapshot);
                Err(to_core(e))
            }
        }
    }
}

/// True if evaluating the expression can do more than bounded arithmetic:
/// calls, nested choices, or partial REAL comparisons.
fn has_dynamic(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Call(..) | ExprKind::Choose(..) => true,
        ExprKind::Gt(l, r) => l.sort() == Sort::Real || has_dynamic(l) || has_dynamic(r),
        ExprKind::Lit(_) | ExprKind::Var(_) => false,
        ExprKind::Index(_, i) => has_dynamic(i),
        ExprKind::Bin(_, l, r) | ExprKind::Eq(l, r) => has_dynamic(l) || has_dynamic(r),
        ExprKind::Neg(x) | ExprKind::Iota(x) => has_dynamic(x),
        ExprKind::Cond(g, t, f) => has_dynamic(g) || has_dynamic(t) || has_dynamic(f),
    }
}

fn bool_value(b: bool) -> Value {
    Value::Int(BigInt::from(u8::from(b)))
}

fn default_value(ty: &Type) -> Value {
    match (ty.sort, ty.len) {
        (Sort::Int, None) => Value::Int(BigInt::zero()),
        (Sort::Real, None) => Value::Real(RealNum::from_integer(0)),
        (Sort::Int, Some(n)) => Value::IntArr(vec![BigInt::zero(); n]),
        (Sort::Real, Some(n)) => Value::RealArr(vec![RealNum::from_integer(0); n]),
    }
}

fn index_in(idx: &BigInt, len: usize, span: Span) -> Result<usize, RunError> {
    let oob = || RunError::OutOfBounds { span, len, idx: idx.clone() };
    if idx.is_negative() {
        return Err(oob());
    }
    match idx.to_usize() {
        Some(i) if i < len => Ok(i),
        _ => Err(oob()),
    }
}

fn expect_int(v: Value) -> Result<BigInt, RunError> {
    match v {
        Value::Int(n) => Ok(n),
        v => Err(RunError::Internal(format!("expected INTEGER, got {}", v.describe()))),
    }
}

fn expect_real(v: Value) -> Result<RealNum, RunError> {
    match v {
        Value::Real(r) => Ok(r),
        v => Err(RunError::Internal(format!("expected REAL, got {}", v.describe()))),
    }
}

/// Parses nothing: runs an already checked program from its entry function.
pub fn run_program(
    prog: &Program,
    checked: &CheckedProgram,
    externals: ExternalFns,
    entry: &str,
    args: Vec<Value>,
    precision: i64,
    cfg: RunConfig,
) -> Result<RunOutcome, RunError> {
    Machine::new(prog.clone(), checked, externals, cfg).run_entry(entry, args, precision)
}
