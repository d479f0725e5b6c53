//! Weakest preconditions and condition generation for annotated
//! functions.
//!
//! Every function carrying at least one annotation (its own `pre`/`post`
//! or a loop contract inside it) yields a batch of conditions named
//! `<Fun>_vc0`, `<Fun>_vc1`, .... Condition 0 always states that the
//! precondition establishes the weakest precondition of the body against
//! the postcondition. The remaining conditions come from loops, batched
//! in source-line order: preservation first (split per branch when the
//! loop body is a single two-way soft branch), then the variant bound,
//! then the exit implication, then guard totality. Functions without any
//! annotation are helpers and are skipped entirely.
//!
//! Statement rules, with q the postcondition being pushed backwards:
//!
//!   x := e              q[e/x], also for declarations with initializers
//!   x := choose(g0..gn) (g0 v .. v gn) ^ (gi => q[i/x]) for every i
//!   IF choose(a, c)     (a v c) ^ (c => wp(then, q)) ^ (a => wp(else, q))
//!   IF l > r on REAL    (l>r v r>l) ^ (l>r => wp(then, q)) ^ (r>l => wp(else, q))
//!   IF g on INTEGER     (g => wp(then, q)) ^ (!g => wp(else, q))
//!   RETURN e            q[e/result] when q mentions result, else q
//!   WHILE ...           the loop rule below
//!
//! A soft loop `WHILE choose(a, c) DO C` with invariant I, variant V,
//! and decrease epsilon (a is the exit guard, c the continue guard) has
//! weakest precondition I ^ (a v c) and contributes the side conditions
//!
//!   preservation     I ^ c ^ V = z  =>  wp(C, (a v c) ^ I ^ V <= z - epsilon)
//!   bound            I ^ V <= 0     =>  !c
//!   exit             I ^ a          =>  q
//!   guard totality   I              =>  a v c
//!
//! with z a fresh ghost variable of the variant's sort. A classical loop
//! `WHILE g DO C` over a decidable INTEGER guard uses the same contract
//! with g for c, !g for a, no totality condition, a weakest precondition
//! of I alone, and epsilon defaulting to 1.
//!
//! Two side conditions are discharged syntactically instead of emitted.
//! The bound is dropped when the continue guard is a single comparison
//! `s > t` with s - t equal to V as a linear form: V <= 0 is then the
//! literal negation of the guard. Guard totality is dropped for the
//! overlap pattern a = (U > t), c = (t > L) over the same t when U is
//! provably above L: either both are constants, or both are iota of
//! INTEGER arguments whose difference is a positive constant. When c
//! fails, t <= L < U makes a true.
//!
//! A call to a program function literally named `Abs` denotes exact
//! absolute value in conditions (the program's soft version is exact in
//! the limit). It is accepted only directly under a comparison, where it
//! expands into the two-sided form; nested occurrences are rejected.
//! Calls to names the program never defines are uninterpreted REAL
//! function symbols; calls to any other defined function are rejected.

use crate::formula::{false_f, Formula};
use crate::parser::{build_comparison, parse_formula, parse_term, ParseError, SortEnv, Tok};
use crate::term::{linear_canon, linear_equal, FSort, Term};
use erc_lang::{
    AnnotKind, Annotation, Block, Expr, ExprKind, FunctionDef, Program, Sort, Stmt, StmtKind,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// One generated proof obligation. The formula is open; its free
/// variables are understood universally and [`Vc::closed`] quantifies
/// them explicitly in name order.
#[derive(Clone, Debug)]
pub struct Vc {
    pub fun: String,
    pub index: usize,
    pub origin: VcOrigin,
    pub line: u32,
    pub formula: Formula,
}

impl Vc {
    pub fn name(&self) -> String {
        format!("{}_vc{}", self.fun, self.index)
    }

    /// The formula closed under a universal prefix over its free
    /// variables, sorted by name.
    pub fn closed(&self) -> Formula {
        let vars: Vec<(String, FSort)> = self.formula.free_vars().into_iter().collect();
        self.formula.clone().forall_closure(&vars)
    }
}

/// What obligation a condition states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VcOrigin {
    /// The precondition establishes the body's weakest precondition.
    Entry,
    /// The loop body re-establishes its invariant and decreases the
    /// variant; `Some(i)` names the branch guard after splitting.
    Preservation(Option<usize>),
    /// Some branch guard of the soft two-way branch is true.
    BranchTotality,
    /// A non-positive variant forces the continue guard false.
    Bound,
    /// Invariant plus exit guard imply the surrounding postcondition.
    Exit,
    /// The invariant keeps some loop guard true.
    GuardTotality,
}

impl VcOrigin {
    pub fn describe(&self) -> String {
        match self {
            VcOrigin::Entry => "entry".into(),
            VcOrigin::Preservation(None) => "preservation".into(),
            VcOrigin::Preservation(Some(i)) => format!("preservation (branch {i})"),
            VcOrigin::BranchTotality => "branch totality".into(),
            VcOrigin::Bound => "bound".into(),
            VcOrigin::Exit => "exit".into(),
            VcOrigin::GuardTotality => "guard totality".into(),
        }
    }
}

/// Condition generation failure, attributed to a function and line.
#[derive(Clone, Debug)]
pub enum VcError {
    MissingAnnotation { fun: String, line: u32, what: &'static str },
    Annotation { fun: String, line: u32, which: &'static str, err: ParseError },
    Unsupported { fun: String, line: u32, what: String },
}

impl fmt::Display for VcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VcError::MissingAnnotation { fun, line, what } => {
                write!(f, "{fun}: line {line}: missing {what} annotation")
            }
            VcError::Annotation { fun, line, which, err } => {
                write!(f, "{fun}: line {line}: in {which} annotation: {err}")
            }
            VcError::Unsupported { fun, line, what } => {
                write!(f, "{fun}: line {line}: {what}")
            }
        }
    }
}

impl std::error::Error for VcError {}

/// Substitution as a named operation: the weakest precondition of an
/// assignment.
pub fn wp_assign(x: &str, e: &Term, q: &Formula) -> Formula {
    q.substitute(x, e)
}

/// Weakest precondition of a two-way soft branch, given the guard
/// formulas and the branch preconditions already pushed through: guard
/// `c` selects the THEN branch, guard `a` the ELSE branch, and one of
/// them must hold.
pub fn wp_if_choose(a: &Formula, c: &Formula, wp_then: Formula, wp_else: Formula) -> Formula {
    Formula::And(vec![
        Formula::Or(vec![a.clone(), c.clone()]),
        Formula::Implies(Box::new(c.clone()), Box::new(wp_then)),
        Formula::Implies(Box::new(a.clone()), Box::new(wp_else)),
    ])
}

/// A parsed loop contract: invariant, variant, decrease, and the ghost
/// variable naming the variant's value at the head of an iteration.
#[derive(Clone, Debug)]
pub struct LoopContract {
    pub invariant: Formula,
    pub variant: Term,
    pub epsilon: Term,
    pub ghost: String,
}

/// Weakest precondition of a soft loop in its five-conjunct form: the
/// value is `I ^ (a v c)`, and the four side conditions (preservation,
/// bound, exit, guard totality) come back closed over the given
/// variables, the ghost quantified innermost in the preservation. No
/// discharge analysis happens here.
pub fn wp_while_choose(
    a: &Formula,
    c: &Formula,
    contract: &LoopContract,
    body_wp: impl FnOnce(Formula) -> Formula,
    post: &Formula,
    assigned: &[(String, FSort)],
) -> (Formula, Vec<Formula>) {
    let vsort = contract.variant.sort();
    let z = Term::Var(contract.ghost.clone(), vsort);
    let decreased = Formula::Ge(
        Term::Sub(Box::new(z.clone()), Box::new(contract.epsilon.clone())),
        contract.variant.clone(),
    );
    let pres_post = Formula::And(vec![
        Formula::Or(vec![a.clone(), c.clone()]),
        contract.invariant.clone(),
        decreased,
    ]);
    let ante = Formula::And(vec![
        contract.invariant.clone(),
        c.clone(),
        Formula::EqF(contract.variant.clone(), z),
    ]);
    let mut pres_vars = assigned.to_vec();
    pres_vars.push((contract.ghost.clone(), vsort));
    let pres = Formula::Implies(Box::new(ante), Box::new(body_wp(pres_post)))
        .forall_closure(&pres_vars);
    let bound = Formula::Implies(
        Box::new(Formula::And(vec![
            contract.invariant.clone(),
            Formula::Ge(zero_of(vsort), contract.variant.clone()),
        ])),
        Box::new(c.negate()),
    )
    .forall_closure(assigned);
    let exit = Formula::Implies(
        Box::new(Formula::And(vec![contract.invariant.clone(), a.clone()])),
        Box::new(post.clone()),
    )
    .forall_closure(assigned);
    let total = Formula::Implies(
        Box::new(contract.invariant.clone()),
        Box::new(Formula::Or(vec![a.clone(), c.clone()])),
    )
    .forall_closure(assigned);
    let value = Formula::And(vec![
        contract.invariant.clone(),
        Formula::Or(vec![a.clone(), c.clone()]),
    ]);
    (value, vec![pres, bound, exit, total])
}

fn zero_of(sort: FSort) -> Term {
    match sort {
        FSort::Int => Term::ilit(0),
        FSort::Real => Term::rlit(0, 1),
    }
}

/// Generates the conditions of every annotated function of a checked
/// program (expressions must carry their sorts already).
pub fn generate_vcs(prog: &Program) -> Result<Vec<Vc>, VcError> {
    let mut out = Vec::new();
    for f in &prog.funs {
        if !has_annotations(f) {
            continue;
        }
        let mut ctx = FnCtx::new(prog, f)?;
        let pre = ctx.fn_formula(f, AnnotKind::Pre)?;
        let post = ctx.fn_formula(f, AnnotKind::Post)?;
        let body_wp = ctx.wp_block(&f.body.0, post)?;
        let mut pending = vec![(
            VcOrigin::Entry,
            f.span.line,
            Formula::Implies(Box::new(pre), Box::new(body_wp)),
        )];
        ctx.batches.sort_by_key(|b| b.line);
        for batch in ctx.batches {
            pending.extend(batch.vcs.into_iter().map(|(o, fm)| (o, batch.line, fm)));
        }
        for (index, (origin, line, formula)) in pending.into_iter().enumerate() {
            out.push(Vc { fun: f.name.clone(), index, origin, line, formula });
        }
    }
    Ok(out)
}

/// Weakest precondition of a statement list inside the named function,
/// discarding any loop side conditions; the statements must come from
/// that function's body so declarations and sorts line up.
pub fn wp_stmts(
    prog: &Program,
    fun: &str,
    stmts: &[Stmt],
    post: &Formula,
) -> Result<Formula, VcError> {
    let f = prog
        .function(fun)
        .unwrap_or_else(|| panic!("unknown function '{fun}'"));
    let mut ctx = FnCtx::new(prog, f)?;
    ctx.wp_block(stmts, post.clone())
}

/// The sort environment a function's annotations are parsed in:
/// parameters, every local declaration, `result` for a scalar return,
/// REAL arrays as INTEGER -> REAL index maps, and every undefined call
/// target as an uninterpreted REAL -> REAL symbol.
pub fn annotation_env(prog: &Program, f: &FunctionDef) -> Result<SortEnv, VcError> {
    FnCtx::new(prog, f).map(|c| c.env)
}

fn has_annotations(f: &FunctionDef) -> bool {
    !f.annots.is_empty() || block_has_annotations(&f.body)
}

fn block_has_annotations(b: &Block) -> bool {
    b.0.iter().any(|s| match &s.kind {
        StmtKind::While { annots, body, .. } => !annots.is_empty() || block_has_annotations(body),
        StmtKind::If { then_blk, else_blk, .. } => {
            block_has_annotations(then_blk)
                || else_blk.as_ref().is_some_and(block_has_annotations)
        }
        _ => false,
    })
}

struct Batch {
    line: u32,
    vcs: Vec<(VcOrigin, Formula)>,
}

struct FnCtx {
    fun: String,
    env: SortEnv,
    defined: BTreeSet<String>,
    batches: Vec<Batch>,
}

impl FnCtx {
    fn new(prog: &Program, f: &FunctionDef) -> Result<Self, VcError> {
        let defined: BTreeSet<String> = prog.funs.iter().map(|g| g.name.clone()).collect();
        let mut ctx = FnCtx {
            fun: f.name.clone(),
            env: SortEnv::default(),
            defined,
            batches: Vec::new(),
        };
        for p in &f.params {
            ctx.bind(&p.name, &p.ty, f.span.line)?;
        }
        ctx.collect_decls(&f.body)?;
        if f.ret.is_scalar() {
            ctx.env.vars.insert("result".into(), fsort(f.ret.sort));
        }
        let mut externals = BTreeSet::new();
        collect_externals(&f.body, &ctx.defined, &mut externals);
        for name in externals {
            ctx.env.funs.entry(name).or_insert((FSort::Real, FSort::Real));
        }
        Ok(ctx)
    }

    fn bind(&mut self, name: &str, ty: &erc_lang::Type, line: u32) -> Result<(), VcError> {
        if ty.is_scalar() {
            let sort = fsort(ty.sort);
            if self.env.vars.insert(name.to_string(), sort) == Some(flip(sort)) {
                return Err(self.unsupported(line, format!("'{name}' is declared at two sorts")));
            }
        } else if ty.sort == Sort::Real {
            self.env.funs.insert(name.to_string(), (FSort::Int, FSort::Real));
        } else {
            return Err(self.unsupported(
                line,
                format!("INTEGER array '{name}' cannot enter conditions as an index map"),
            ));
        }
        Ok(())
    }

    fn collect_decls(&mut self, b: &Block) -> Result<(), VcError> {
        for s in &b.0 {
            match &s.kind {
                StmtKind::Decl { ty, name, .. } => self.bind(name, ty, s.span.line)?,
                StmtKind::If { then_blk, else_blk, .. } => {
                    self.collect_decls(then_blk)?;
                    if let Some(e) = else_blk {
                        self.collect_decls(e)?;
                    }
                }
                StmtKind::While { body, .. } => self.collect_decls(body)?,
                _ => {}
            }
        }
        Ok(())
    }

    fn unsupported(&self, line: u32, what: String) -> VcError {
        VcError::Unsupported { fun: self.fun.clone(), line, what }
    }

    fn parse_annot(&self, a: &Annotation) -> Result<Formula, VcError> {
        parse_formula(&a.text, &self.env).map_err(|err| VcError::Annotation {
            fun: self.fun.clone(),
            line: a.span.line,
            which: a.kind.keyword(),
            err,
        })
    }

    /// Function-level pre/post, defaulting to true, rejecting duplicates.
    fn fn_formula(&self, f: &FunctionDef, kind: AnnotKind) -> Result<Formula, VcError> {
        let mut found: Option<&Annotation> = None;
        for a in f.annots.iter().filter(|a| a.kind == kind) {
            if found.is_some() {
                return Err(self.unsupported(
                    a.span.line,
                    format!("duplicate {} annotation", kind.keyword()),
                ));
            }
            found = Some(a);
        }
        match found {
            Some(a) => self.parse_annot(a),
            None => Ok(Formula::TrueF),
        }
    }

    fn wp_block(&mut self, stmts: &[Stmt], q: Formula) -> Result<Formula, VcError> {
        let mut q = q;
        for s in stmts.iter().rev() {
            q = self.wp_stmt(s, q)?;
        }
        Ok(q)
    }

    fn wp_stmt(&mut self, s: &Stmt, q: Formula) -> Result<Formula, VcError> {
        let line = s.span.line;
        match &s.kind {
            StmtKind::Decl { name, init: Some(e), .. } => self.wp_store(name, e, q, line),
            StmtKind::Decl { name, init: None, .. } => {
                if q.free_vars().contains_key(name) {
                    Err(self.unsupported(
                        line,
                        format!("declaration of '{name}' without initializer feeds the condition"),
                    ))
                } else {
                    Ok(q)
                }
            }
            StmtKind::Assign { target, value } => {
                if target.index.is_some() {
                    return Err(self
                        .unsupported(line, "assignment to an array element".to_string()));
                }
                self.wp_store(&target.name, value, q, line)
            }
            StmtKind::Return(e) => {
                if q.free_vars().contains_key("result") {
                    Ok(q.substitute("result", &self.translate(e, line)?))
                } else {
                    Ok(q)
                }
            }
            StmtKind::If { guard, then_blk, else_blk } => {
                let wp_else = match else_blk {
                    Some(b) => self.wp_block(&b.0, q.clone())?,
                    None => q.clone(),
                };
                match &guard.kind {
                    ExprKind::Choose(gs) if gs.len() == 2 => {
                        let a = self.guard_formula(&gs[0], line)?;
                        let c = self.guard_formula(&gs[1], line)?;
                        let wp_then = self.wp_block(&then_blk.0, q)?;
                        Ok(wp_if_choose(&a, &c, wp_then, wp_else))
                    }
                    ExprKind::Choose(_) => Err(self.unsupported(
                        line,
                        "branch guards use two-way choose".to_string(),
                    )),
                    ExprKind::Gt(l, _) if l.sort() == Sort::Real => {
                        let g = self.guard_formula(guard, line)?;
                        let flipped = self.flipped_guard(guard, line)?;
                        let wp_then = self.wp_block(&then_blk.0, q)?;
                        Ok(wp_if_choose(&flipped, &g, wp_then, wp_else))
                    }
                    ExprKind::Gt(_, _) | ExprKind::Eq(_, _) => {
                        let g = self.guard_formula(guard, line)?;
                        let wp_then = self.wp_block(&then_blk.0, q)?;
                        Ok(Formula::And(vec![
                            Formula::Implies(Box::new(g.clone()), Box::new(wp_then)),
                            Formula::Implies(Box::new(g.negate()), Box::new(wp_else)),
                        ]))
                    }
                    _ => Err(self.unsupported(
                        line,
                        "branch guards must be comparisons or two-way choose".to_string(),
                    )),
                }
            }
            StmtKind::While { guard, body, annots } => self.wp_while(guard, body, annots, q, line),
        }
    }

    /// Assignment or initializing declaration, including the choose form.
    fn wp_store(&mut self, name: &str, e: &Expr, q: Formula, line: u32) -> Result<Formula, VcError> {
        if let ExprKind::Choose(gs) = &e.kind {
            let mut guards = Vec::new();
            for g in gs {
                guards.push(self.guard_formula(g, line)?);
            }
            let mut conj = vec![Formula::Or(guards.clone())];
            for (i, g) in guards.into_iter().enumerate() {
                conj.push(Formula::Implies(
                    Box::new(g),
                    Box::new(q.substitute(name, &Term::ILit(BigInt::from(i)))),
                ));
            }
            return Ok(Formula::And(conj));
        }
        Ok(q.substitute(name, &self.translate(e, line)?))
    }

    fn wp_while(
        &mut self,
        guard: &Expr,
        body: &Block,
        annots: &[Annotation],
        q: Formula,
        line: u32,
    ) -> Result<Formula, VcError> {
        let (inv, variant, eps, ghost) = self.loop_contract(annots, body, line)?;
        let vsort = variant.sort();
        let z = Term::Var(ghost, vsort);
        let pres_ante = |cont: &Formula| {
            Formula::And(vec![
                inv.clone(),
                cont.clone(),
                Formula::EqF(variant.clone(), z.clone()),
            ])
        };
        let decreased = Formula::Ge(
            Term::Sub(Box::new(z.clone()), Box::new(eps.clone())),
            variant.clone(),
        );
        let mut vcs: Vec<(VcOrigin, Formula)> = Vec::new();
        let value = match &guard.kind {
            ExprKind::Choose(gs) if gs.len() == 2 => {
                let a = self.guard_formula(&gs[0], line)?;
                let c = self.guard_formula(&gs[1], line)?;
                let pres_post = Formula::And(vec![
                    Formula::Or(vec![a.clone(), c.clone()]),
                    inv.clone(),
                    decreased,
                ]);
                let ante = pres_ante(&c);
                match single_soft_branch(body) {
                    Some((bg, then_blk, else_blk)) => {
                        let ExprKind::Choose(bgs) = &bg.kind else {
                            unreachable!("matched a two-way choose")
                        };
                        let ba = self.guard_formula(&bgs[0], line)?;
                        let bc = self.guard_formula(&bgs[1], line)?;
                        let wp_then = self.wp_block(&then_blk.0, pres_post.clone())?;
                        let wp_else = self.wp_block(&else_blk.0, pres_post)?;
                        vcs.push((
                            VcOrigin::Preservation(Some(0)),
                            implies_all(&ante, &ba, wp_else),
                        ));
                        vcs.push((
                            VcOrigin::Preservation(Some(1)),
                            implies_all(&ante, &bc, wp_then),
                        ));
                        let both = Formula::Or(vec![ba, bc]);
                        let mut again = match ante.clone() {
                            Formula::And(parts) => parts,
                            other => vec![other],
                        };
                        again.push(both);
                        vcs.push((
                            VcOrigin::BranchTotality,
                            Formula::Implies(Box::new(ante), Box::new(Formula::And(again))),
                        ));
                    }
                    None => {
                        let wp_body = self.wp_block(&body.0, pres_post)?;
                        vcs.push((
                            VcOrigin::Preservation(None),
                            Formula::Implies(Box::new(ante), Box::new(wp_body)),
                        ));
                    }
                }
                if !self.bound_discharged(&gs[1], &variant) {
                    vcs.push((
                        VcOrigin::Bound,
                        Formula::Implies(
                            Box::new(Formula::And(vec![
                                inv.clone(),
                                Formula::Ge(zero_of(vsort), variant.clone()),
                            ])),
                            Box::new(c.negate()),
                        ),
                    ));
                }
                vcs.push((
                    VcOrigin::Exit,
                    Formula::Implies(
                        Box::new(Formula::And(vec![inv.clone(), a.clone()])),
                        Box::new(q),
                    ),
                ));
                if !self.totality_discharged(&gs[0], &gs[1]) {
                    vcs.push((
                        VcOrigin::GuardTotality,
                        Formula::Implies(
                            Box::new(inv.clone()),
                            Box::new(Formula::Or(vec![a.clone(), c.clone()])),
                        ),
                    ));
                }
                Formula::And(vec![inv, Formula::Or(vec![a, c])])
            }
            ExprKind::Choose(_) => {
                return Err(self.unsupported(line, "loop guards use two-way choose".to_string()))
            }
            ExprKind::Gt(l, _) | ExprKind::Eq(l, _) if l.sort() == Sort::Int => {
                let c = self.guard_formula(guard, line)?;
                let pres_post = Formula::And(vec![inv.clone(), decreased]);
                let wp_body = self.wp_block(&body.0, pres_post)?;
                vcs.push((
                    VcOrigin::Preservation(None),
                    Formula::Implies(Box::new(pres_ante(&c)), Box::new(wp_body)),
                ));
                if !self.bound_discharged(guard, &variant) {
                    vcs.push((
                        VcOrigin::Bound,
                        Formula::Implies(
                            Box::new(Formula::And(vec![
                                inv.clone(),
                                Formula::Ge(zero_of(vsort), variant.clone()),
                            ])),
                            Box::new(c.negate()),
                        ),
                    ));
                }
                vcs.push((
                    VcOrigin::Exit,
                    Formula::Implies(
                        Box::new(Formula::And(vec![inv.clone(), c.negate()])),
                        Box::new(q),
                    ),
                ));
                inv
            }
            ExprKind::Gt(_, _) => {
                return Err(self.unsupported(
                    line,
                    "a REAL comparison cannot guard a loop; use a two-way choose".to_string(),
                ))
            }
            _ => {
                return Err(self.unsupported(
                    line,
                    "loop guards must be INTEGER comparisons or two-way choose".to_string(),
                ))
            }
        };
        self.batches.push(Batch { line, vcs });
        Ok(value)
    }

    fn loop_contract(
        &self,
        annots: &[Annotation],
        body: &Block,
        line: u32,
    ) -> Result<(Formula, Term, Term, String), VcError> {
        let pick = |kind: AnnotKind| -> Result<Option<&Annotation>, VcError> {
            let mut found = None;
            for a in annots.iter().filter(|a| a.kind == kind) {
                if found.is_some() {
                    return Err(self.unsupported(
                        a.span.line,
                        format!("duplicate {} annotation", kind.keyword()),
                    ));
                }
                found = Some(a);
            }
            Ok(found)
        };
        let inv_a = pick(AnnotKind::Invariant)?.ok_or(VcError::MissingAnnotation {
            fun: self.fun.clone(),
            line,
            what: "invariant",
        })?;
        let var_a = pick(AnnotKind::Variant)?.ok_or(VcError::MissingAnnotation {
            fun: self.fun.clone(),
            line,
            what: "variant",
        })?;
        let inv = self.parse_annot(inv_a)?;
        let (variant, vsort) =
            parse_term(&var_a.text, &self.env, None).map_err(|err| VcError::Annotation {
                fun: self.fun.clone(),
                line: var_a.span.line,
                which: "variant",
                err,
            })?;
        let eps = match pick(AnnotKind::Epsilon)? {
            Some(a) => {
                let (e, esort) =
                    parse_term(&a.text, &self.env, Some(vsort)).map_err(|err| {
                        VcError::Annotation {
                            fun: self.fun.clone(),
                            line: a.span.line,
                            which: "epsilon",
                            err,
                        }
                    })?;
                if esort != vsort {
                    return Err(self.unsupported(
                        a.span.line,
                        format!("epsilon is {esort} but the variant is {vsort}"),
                    ));
                }
                e
            }
            None => match vsort {
                FSort::Int => Term::ilit(1),
                FSort::Real => {
                    return Err(VcError::MissingAnnotation {
                        fun: self.fun.clone(),
                        line,
                        what: "epsilon (required by a REAL variant)",
                    })
                }
            },
        };
        let assigned = assigned_names(body);
        let mut eps_vars = BTreeMap::new();
        eps.free_vars(&mut eps_vars);
        if let Some(name) = eps_vars.keys().find(|n| assigned.contains(*n)) {
            return Err(self.unsupported(
                line,
                format!("epsilon must be loop constant but '{name}' is assigned in the body"),
            ));
        }
        let ghost = self.fresh_ghost();
        Ok((inv, variant, eps, ghost))
    }

    /// A name not used by any variable or function symbol in scope.
    fn fresh_ghost(&self) -> String {
        if !self.env.vars.contains_key("z") && !self.env.funs.contains_key("z") {
            return "z".into();
        }
        (0..)
            .map(|i| format!("z{i}"))
            .find(|n| !self.env.vars.contains_key(n) && !self.env.funs.contains_key(n))
            .expect("an unused ghost name exists")
    }

    /// The bound condition is discharged when the continue guard is a
    /// plain comparison whose margin is the variant itself.
    fn bound_discharged(&self, cont: &Expr, variant: &Term) -> bool {
        let ExprKind::Gt(l, r) = &cont.kind else {
            return false;
        };
        let (Ok((lt, false)), Ok((rt, false))) = (self.side_term(l, 0), self.side_term(r, 0))
        else {
            return false;
        };
        linear_equal(&Term::Sub(Box::new(lt), Box::new(rt)), variant)
    }

    /// Guard totality is discharged for the overlap pattern
    /// a = (U > t), c = (t > L) with U provably above L.
    fn totality_discharged(&self, exit: &Expr, cont: &Expr) -> bool {
        let (ExprKind::Gt(u, t0), ExprKind::Gt(t1, l)) = (&exit.kind, &cont.kind) else {
            return false;
        };
        let (Ok((ut, false)), Ok(side0), Ok(side1), Ok((lt, false))) = (
            self.side_term(u, 0),
            self.side_term(t0, 0),
            self.side_term(t1, 0),
            self.side_term(l, 0),
        ) else {
            return false;
        };
        if side0 != side1 {
            return false;
        }
        if let (Some(uc), Some(lc)) = (ut.const_eval(), lt.const_eval()) {
            return uc > lc;
        }
        if let (Term::Iota(ua), Term::Iota(la)) = (&ut, &lt) {
            let diff = Term::Sub(ua.clone(), la.clone());
            if let Some((atoms, c)) = linear_canon(&diff) {
                return atoms.is_empty() && c.is_positive();
            }
        }
        false
    }

    /// Translates a guard comparison into a formula, expanding absolute
    /// values by side.
    fn guard_formula(&self, e: &Expr, line: u32) -> Result<Formula, VcError> {
        let (op, l, r) = match &e.kind {
            ExprKind::Gt(l, r) => (Tok::Gt, l, r),
            ExprKind::Eq(l, r) => (Tok::Eq, l, r),
            _ => {
                return Err(
                    self.unsupported(line, "guards must be comparisons".to_string())
                )
            }
        };
        let (lt, labs) = self.side_term(l, line)?;
        let (rt, rabs) = self.side_term(r, line)?;
        build_comparison(&op, labs, lt, rabs, rt).map_err(|m| self.unsupported(line, m))
    }

    /// The reflection r > l of a guard l > r, for the two-sided form of
    /// a soft REAL branch.
    fn flipped_guard(&self, e: &Expr, line: u32) -> Result<Formula, VcError> {
        let ExprKind::Gt(l, r) = &e.kind else {
            unreachable!("caller matched Gt")
        };
        let (lt, labs) = self.side_term(l, line)?;
        let (rt, rabs) = self.side_term(r, line)?;
        build_comparison(&Tok::Gt, rabs, rt, labs, lt).map_err(|m| self.unsupported(line, m))
    }

    /// One side of a comparison: a top-level call to the program's `Abs`
    /// marks the side as an absolute value.
    fn side_term(&self, e: &Expr, line: u32) -> Result<(Term, bool), VcError> {
        if let ExprKind::Call(name, args) = &e.kind {
            if name == "Abs" && self.defined.contains(name) && args.len() == 1 {
                return Ok((self.translate(&args[0], line)?, true));
            }
        }
        Ok((self.translate(e, line)?, false))
    }

    /// Translates a program expression into a term. Literal fractions
    /// collapse into rational constants, exactly as the formula parser
    /// does, so generated and stored atoms agree structurally.
    fn translate(&self, e: &Expr, line: u32) -> Result<Term, VcError> {
        match &e.kind {
            ExprKind::Lit(n) => Ok(match e.sort() {
                Sort::Int => Term::ILit(n.clone()),
                Sort::Real => Term::RLit(BigRational::from_integer(n.clone())),
            }),
            ExprKind::Var(x) => match self.env.vars.get(x) {
                Some(sort) => Ok(Term::Var(x.clone(), *sort)),
                None => Err(self.unsupported(
                    line,
                    format!("array '{x}' cannot appear as a scalar value"),
                )),
            },
            ExprKind::Index(name, idx) => {
                if !self.env.funs.contains_key(name) {
                    return Err(self.unsupported(
                        line,
                        format!("'{name}' has no index-map form in conditions"),
                    ));
                }
                Ok(Term::App(name.clone(), vec![self.translate(idx, line)?]))
            }
            ExprKind::Bin(op, l, r) => {
                use erc_lang::BinOp;
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul => {
                        let lt = Box::new(self.translate(l, line)?);
                        let rt = Box::new(self.translate(r, line)?);
                        Ok(match op {
                            BinOp::Add => Term::Add(lt, rt),
                            BinOp::Sub => Term::Sub(lt, rt),
                            _ => Term::Mul(lt, rt),
                        })
                    }
                    BinOp::Div => {
                        let ExprKind::Lit(d) = &r.kind else {
                            return Err(self.unsupported(
                                line,
                                "division is only supported by an integer literal".to_string(),
                            ));
                        };
                        if d.is_zero() {
                            return Err(self.unsupported(line, "division by zero".to_string()));
                        }
                        if let ExprKind::Lit(n) = &l.kind {
                            return Ok(Term::RLit(BigRational::new(n.clone(), d.clone())));
                        }
                        Ok(Term::Div(Box::new(self.translate(l, line)?), d.clone()))
                    }
                }
            }
            ExprKind::Neg(x) => Ok(Term::Neg(Box::new(self.translate(x, line)?))),
            ExprKind::Iota(x) => Ok(Term::Iota(Box::new(self.translate(x, line)?))),
            ExprKind::Gt(_, _) | ExprKind::Eq(_, _) => Err(self.unsupported(
                line,
                "comparisons are only supported as guards".to_string(),
            )),
            ExprKind::Choose(_) => Err(self.unsupported(
                line,
                "choose is only supported as a guard or the whole right-hand side".to_string(),
            )),
            ExprKind::Cond(_, _, _) =>

                Err(self.unsupported(line, "conditional expressions are not supported".to_string())),
            ExprKind::Call(name, args) => {
                if self.defined.contains(name) {
                    if name == "Abs" {
                        return Err(self.unsupported(
                            line,
                            "absolute value is only supported directly under a comparison"
                                .to_string(),
                        ));
                    }
                    return Err(self.unsupported(
                        line,
                        format!("call to defined function '{name}' in a condition"),
                    ));
                }
                Ok(Term::App(name.clone(), vec![self.translate(&args[0], line)?]))
            }
        }
    }
}

/// `ante ^ extra => concl`, flattening the antecedent conjunction.
fn implies_all(ante: &Formula, extra: &Formula, concl: Formula) -> Formula {
    let mut parts = match ante.clone() {
        Formula::And(parts) => parts,
        other => vec![other],
    };
    parts.push(extra.clone());
    Formula::Implies(Box::new(Formula::And(parts)), Box::new(concl))
}

/// Recognizes a loop body that is exactly one two-way soft branch.
fn single_soft_branch(body: &Block) -> Option<(&Expr, &Block, &Block)> {
    match body.0.as_slice() {
        [Stmt { kind: StmtKind::If { guard, then_blk, else_blk: Some(eb) }, .. }]
            if matches!(&guard.kind, ExprKind::Choose(gs) if gs.len() == 2) =>
        {
            Some((guard, then_blk, eb))
        }
        _ => None,
    }
}

/// Names assigned or declared anywhere in a block.
fn assigned_names(b: &Block) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_assigned(b, &mut out);
    out
}

fn collect_assigned(b: &Block, out: &mut BTreeSet<String>) {
    for s in &b.0 {
        match &s.kind {
            StmtKind::Decl { name, .. } => {
                out.insert(name.clone());
            }
            StmtKind::Assign { target, .. } => {
                out.insert(target.name.clone());
            }
            StmtKind::If { then_blk, else_blk, .. } => {
                collect_assigned(then_blk, out);
                if let Some(e) = else_blk {
                    collect_assigned(e, out);
                }
            }
            StmtKind::While { body, .. } => collect_assigned(body, out),
            StmtKind::Return(_) => {}
        }
    }
}

fn collect_externals(b: &Block, defined: &BTreeSet<String>, out: &mut BTreeSet<String>) {
    fn walk_expr(e: &Expr, defined: &BTreeSet<String>, out: &mut BTreeSet<String>) {
        match &e.kind {
            ExprKind::Call(name, args) => {
                if !defined.contains(name) {
                    out.insert(name.clone());
                }
                for a in args {
                    walk_expr(a, defined, out);
                }
            }
            ExprKind::Lit(_) | ExprKind::Var(_) => {}
            ExprKind::Index(_, i) => walk_expr(i, defined, out),
            ExprKind::Bin(_, l, r) | ExprKind::Gt(l, r) | ExprKind::Eq(l, r) => {
                walk_expr(l, defined, out);
                walk_expr(r, defined, out);
            }
            ExprKind::Neg(x) | ExprKind::Iota(x) => walk_expr(x, defined, out),
            ExprKind::Choose(gs) => {
                for g in gs {
                    walk_expr(g, defined, out);
                }
            }
            ExprKind::Cond(a, b, c) => {
                walk_expr(a, defined, out);
                walk_expr(b, defined, out);
                walk_expr(c, defined, out);
            }
        }
    }
    for s in &b.0 {
        match &s.kind {
            StmtKind::Decl { init: Some(e), .. } | StmtKind::Return(e) => {
                walk_expr(e, defined, out)
            }
            StmtKind::Decl { init: None, .. } => {}
            StmtKind::Assign { target, value } => {
                if let Some(i) = &target.index {
                    walk_expr(i, defined, out);
                }
                walk_expr(value, defined, out);
            }
            StmtKind::If { guard, then_blk, else_blk } => {
                walk_expr(guard, defined, out);
                collect_externals(then_blk, defined, out);
                if let Some(e) = else_blk {
                    collect_externals(e, defined, out);
                }
            }
            StmtKind::While { guard, body, .. } => {
                walk_expr(guard, defined, out);
                collect_externals(body, defined, out);
            }
        }
    }
}

fn fsort(s: Sort) -> FSort {
    match s {
        Sort::Int => FSort::Int,
        Sort::Real => FSort::Real,
    }
}

fn flip(s: FSort) -> FSort {
    match s {
        FSort::Int => FSort::Real,
        FSort::Real => FSort::Int,
    }
}

/// Keeps the canonical false reachable for tests of degenerate guards.
pub fn unsatisfiable_guard() -> Formula {
    false_f()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::alpha_equivalent;
    use std::collections::BTreeSet;

    fn checked(src: &str, externals: &[&str]) -> Program {
        let mut prog = erc_lang::parse(src, "test.erc").expect("parses");
        let ext: BTreeSet<String> = externals.iter().map(|s| s.to_string()).collect();
        erc_lang::check_program(&mut prog, &ext).expect("sorts");
        prog
    }

    #[test]
    fn straight_line_function_yields_one_entry_condition() {
        let prog = checked(
            "//@ pre: true\n//@ post: result = 0\nINTEGER Zero() {\n    INTEGER x := 0;\n    RETURN x;\n}\n",
            &[],
        );
        let vcs = generate_vcs(&prog).expect("generates");
        assert_eq!(vcs.len(), 1);
        assert_eq!(vcs[0].name(), "Zero_vc0");
        assert_eq!(vcs[0].origin, VcOrigin::Entry);
        // true -> 0 = 0 normalizes away entirely.
        assert_eq!(vcs[0].formula.normalize(), Formula::TrueF);
    }

    #[test]
    fn functions_without_annotations_are_skipped() {
        let prog = checked(
            "INTEGER Helper(INTEGER n) {\n    RETURN n + 1;\n}\n",
            &[],
        );
        assert!(generate_vcs(&prog).expect("generates").is_empty());
    }

    #[test]
    fn unannotated_loops_inside_annotated_functions_are_reported() {
        let prog = checked(
            "//@ post: result >= 0\nINTEGER Spin(INTEGER n) {\n    INTEGER i := 0;\n    WHILE n > i DO {\n        i := i + 1;\n    }\n    RETURN i;\n}\n",
            &[],
        );
        match generate_vcs(&prog) {
            Err(VcError::MissingAnnotation { fun, line, what }) => {
                assert_eq!(fun, "Spin");
                assert_eq!(line, 4);
                assert_eq!(what, "invariant");
            }
            other => panic!("expected a missing annotation, got {other:?}"),
        }
    }

    #[test]
    fn return_substitutes_only_when_result_is_mentioned() {
        let prog = checked(
            "//@ pre: true\n//@ post: result > n\nINTEGER Inc(INTEGER n) {\n    RETURN n + 1;\n}\n",
            &[],
        );
        let vcs = generate_vcs(&prog).expect("generates");
        let expected = Formula::Implies(
            Box::new(Formula::TrueF),
            Box::new(Formula::Gt(
                Term::Add(Box::new(Term::ivar("n")), Box::new(Term::ilit(1))),
                Term::ivar("n"),
            )),
        );
        assert_eq!(vcs[0].formula, expected);
    }

    #[test]
    fn choose_assignment_requires_some_guard_and_cases_split() {
        let prog = checked(
            "//@ pre: true\n//@ post: result >= 0\nINTEGER Pick(REAL x) {\n    INTEGER b := choose(0 > x, x > 0);\n    RETURN b;\n}\n",
            &[],
        );
        let vcs = generate_vcs(&prog).expect("generates");
        let g0 = Formula::Gt(Term::rlit(0, 1), Term::rvar("x"));
        let g1 = Formula::Gt(Term::rvar("x"), Term::rlit(0, 1));
        let case = |i: i64| {
            Formula::Implies(
                Box::new(if i == 0 { g0.clone() } else { g1.clone() }),
                Box::new(Formula::Ge(Term::ilit(i), Term::ilit(0))),
            )
        };
        let expected = Formula::Implies(
            Box::new(Formula::TrueF),
            Box::new(Formula::And(vec![
                Formula::Or(vec![g0.clone(), g1.clone()]),
                case(0),
                case(1),
            ])),
        );
        assert_eq!(vcs[0].formula, expected);
    }

    #[test]
    fn array_element_assignment_is_rejected() {
        let prog = checked(
            "//@ pre: true\n//@ post: true\nINTEGER Fill(REAL[4] A) {\n    A[0] := 1;\n    RETURN 0;\n}\n",
            &[],
        );
        match generate_vcs(&prog) {
            Err(VcError::Unsupported { what, .. }) => {
                assert!(what.contains("array element"), "{what}");
            }
            other => panic!("expected unsupported, got {other:?}"),
        }
    }

    #[test]
    fn five_conjunct_loop_shape_holds_and_degenerate_guards_are_vacuous() {
        let inv = Formula::Gt(Term::rvar("x"), Term::rlit(0, 1));
        let contract = LoopContract {
            invariant: inv.clone(),
            variant: Term::rvar("x"),
            epsilon: Term::rlit(1, 4),
            ghost: "z".into(),
        };
        let a = Formula::TrueF;
        let c = false_f();
        let post = Formula::Ge(Term::rvar("x"), Term::rlit(0, 1));
        let assigned = vec![("x".to_string(), FSort::Real)];
        let (value, side) = wp_while_choose(&a, &c, &contract, |q| q, &post, &assigned);
        assert_eq!(side.len(), 4);
        // Value is I ^ (a v c).
        assert_eq!(
            value,
            Formula::And(vec![
                inv.clone(),
                Formula::Or(vec![Formula::TrueF, false_f()])
            ])
        );
        // With c unsatisfiable the preservation condition is vacuous, and
        // with a trivially true the exit condition is just I => post.
        assert_eq!(side[0].normalize(), Formula::TrueF);
        let exit = &side[2];
        let expected_exit = Formula::Forall(
            "x".into(),
            FSort::Real,
            Box::new(Formula::Implies(
                Box::new(Formula::And(vec![inv.clone(), Formula::TrueF])),
                Box::new(post.clone()),
            )),
        );
        assert!(alpha_equivalent(exit, &expected_exit));
        // Preservation quantifies the ghost innermost.
        let (vars, _) = side[0].strip_forall_prefix();
        assert_eq!(
            vars,
            vec![("x".to_string(), FSort::Real), ("z".to_string(), FSort::Real)]
        );
    }

    #[test]
    fn sequencing_composes_structurally() {
        let prog = checked(
            "//@ pre: true\n//@ post: result = 1\nINTEGER Two() {\n    INTEGER x := 1;\n    INTEGER y := x;\n    RETURN y;\n}\n",
            &[],
        );
        let f = prog.function("Two").expect("exists");
        let post = Formula::EqF(Term::ivar("result"), Term::ilit(1));
        let all = wp_stmts(&prog, "Two", &f.body.0, &post).expect("wp");
        let split = {
            let tail = wp_stmts(&prog, "Two", &f.body.0[1..], &post).expect("wp tail");
            wp_stmts(&prog, "Two", &f.body.0[..1], &tail).expect("wp head")
        };
        assert_eq!(all, split);
    }
}
