//! Sort checker and elaborator.
//!
//! Rules enforced here:
//! - literals are polymorphic and take their sort from context (INTEGER when
//!   unconstrained);
//! - INTEGER supports `+`, `-`, total `>` and `=`, and multiplication by a
//!   literal constant up to 2^16, which is elaborated into a balanced chain
//!   of additions; general INTEGER multiplication and division are rejected;
//! - REAL supports `+`, `-`, `*`, `/` and partial `>`; REAL `=` is rejected;
//! - `iota` is the only INTEGER-to-REAL bridge;
//! - guards, choose branches and conditionals are INTEGER-sorted;
//! - calls to scalar-REAL functions omit the leading precision parameter;
//! - array variables have static length and are indexed by INTEGER.

use crate::ast::*;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// Sort error with source position.
#[derive(Clone, Debug)]
pub struct SortError {
    pub file: String,
    pub span: Span,
    pub msg: String,
}

impl std::fmt::Display for SortError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}: sort error: {}", self.file, self.span.line, self.span.col, self.msg)
    }
}

impl std::error::Error for SortError {}

/// Largest literal allowed as an INTEGER multiplication constant.
pub const MAX_INT_MUL: u64 = 1 << 16;

#[derive(Clone, Debug)]
pub struct FnSig {
    pub params: Vec<Type>,
    pub ret: Type,
    /// True when call sites omit the leading precision parameter.
    pub precision_param: bool,
}

impl FnSig {
    /// Parameter types as seen by call sites.
    pub fn visible_params(&self) -> &[Type] {
        if self.precision_param {
            &self.params[1..]
        } else {
            &self.params
        }
    }
}

#[derive(Debug)]
pub struct CheckedProgram {
    pub sigs: BTreeMap<String, FnSig>,
}

/// Checks and elaborates the program in place. `externals` names oracle
/// functions of signature REAL -> REAL bound by the harness.
pub fn check_program(
    prog: &mut Program,
    externals: &BTreeSet<String>,
) -> Result<CheckedProgram, SortError> {
    let mut sigs = BTreeMap::new();
    for f in &prog.funs {
        if sigs.contains_key(&f.name) {
            return Err(err(prog, f.span, format!("duplicate function '{}'", f.name)));
        }
        if externals.contains(&f.name) {
            return Err(err(prog, f.span, format!("'{}' shadows an external function", f.name)));
        }
        sigs.insert(
            f.name.clone(),
            FnSig {
                params: f.params.iter().map(|p| p.ty.clone()).collect(),
                ret: f.ret.clone(),
                precision_param: f.has_precision_param(),
            },
        );
    }
    let file = prog.file.clone();
    for f in &mut prog.funs {
        let mut cx = Ctx {
            file: &file,
            sigs: &sigs,
            externals,
            vars: BTreeMap::new(),
            ret: f.ret.clone(),
        };
        for p in &f.params {
            if cx.vars.insert(p.name.clone(), p.ty.clone()).is_some() {
                return Err(cx.err(f.span, format!("duplicate parameter '{}'", p.name)));
            }
        }
        cx.block(&mut f.body)?;
    }
    Ok(CheckedProgram { sigs })
}

fn err(prog: &Program, span: Span, msg: String) -> SortError {
    SortError { file: prog.file.clone(), span, msg }
}

struct Ctx<'a> {
    file: &'a str,
    sigs: &'a BTreeMap<String, FnSig>,
    externals: &'a BTreeSet<String>,
    vars: BTreeMap<String, Type>,
    ret: Type,
}

impl<'a> Ctx<'a> {
    fn err(&self, span: Span, msg: String) -> SortError {
        SortError { file: self.file.to_string(), span, msg }
    }

    fn block(&mut self, b: &mut Block) -> Result<(), SortError> {
        for s in &mut b.0 {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &mut Stmt) -> Result<(), SortError> {
        let span = s.span;
        match &mut s.kind {
            StmtKind::Decl { ty, name, init } => {
                if self.vars.contains_key(name) {
                    return Err(self.err(span, format!("'{name}' already declared")));
                }
                if let Some(e) = init {
                    if !ty.is_scalar() {
                        return Err(self.err(span, "array declarations take no initializer".into()));
                    }
                    self.check(e, Some(ty.clone()))?;
                }
                self.vars.insert(name.clone(), ty.clone());
                Ok(())
            }
            StmtKind::Assign { target, value } => {
                let var_ty = self
                    .vars
                    .get(&target.name)
                    .cloned()
                    .ok_or_else(|| self.err(target.span, format!("unknown variable '{}'", target.name)))?;
                let expected = match &mut target.index {
                    None => {
                        if !var_ty.is_scalar() {
                            return Err(self.err(target.span, "arrays are assigned element-wise".into()));
                        }
                        var_ty
                    }
                    Some(idx) => {
                        if var_ty.is_scalar() {
                            return Err(self.err(target.span, format!("'{}' is not an array", target.name)));
                        }
                        self.check(idx, Some(Type::scalar(Sort::Int)))?;
                        Type::scalar(var_ty.sort)
                    }
                };
                self.check(value, Some(expected))?;
                Ok(())
            }
            StmtKind::If { guard, then_blk, else_blk } => {
                self.check(guard, Some(Type::scalar(Sort::Int)))?;
                self.block(then_blk)?;
                if let Some(e) = else_blk {
                    self.block(e)?;
                }
                Ok(())
            }
            StmtKind::While { guard, body, .. } => {
                self.check(guard, Some(Type::scalar(Sort::Int)))?;
                self.block(body)
            }
            StmtKind::Return(e) => {
                let ret = self.ret.clone();
                self.check(e, Some(ret))?;
                Ok(())
            }
        }
    }

    /// Checks an expression against an optional expected type, annotating
    /// `e.ty`. Literals adopt the expected sort, defaulting to INTEGER.
    fn check(&mut self, e: &mut Expr, expected: Option<Type>) -> Result<Type, SortError> {
        let ty = self.infer(e, expected.as_ref())?;
        if let Some(want) = expected {
            if ty != want {
                return Err(self.err(e.span, format!("expected {want}, found {ty}")));
            }
        }
        Ok(ty)
    }

    fn infer(&mut self, e: &mut Expr, expected: Option<&Type>) -> Result<Type, SortError> {
        if matches!(e.kind, ExprKind::Bin(..)) {
            return self.infer_bin(e, expected);
        }
        let span = e.span;
        let ty = match &mut e.kind {
            ExprKind::Lit(_) => match expected {
                Some(t) if t.is_scalar() => t.clone(),
                Some(t) => return Err(self.err(span, format!("literal cannot have type {t}"))),
                None => Type::scalar(Sort::Int),
            },
            ExprKind::Var(name) => self
                .vars
                .get(name)
                .cloned()
                .ok_or_else(|| self.err(span, format!("unknown variable '{name}'")))?,
            ExprKind::Index(name, idx) => {
                let t = self
                    .vars
                    .get(name)
                    .cloned()
                    .ok_or_else(|| self.err(span, format!("unknown variable '{name}'")))?;
                if t.is_scalar() {
                    return Err(self.err(span, format!("'{name}' is not an array")));
                }
                self.check(idx, Some(Type::scalar(Sort::Int)))?;
                Type::scalar(t.sort)
            }
            ExprKind::Neg(inner) => {
                let t = self.infer(inner, expected)?;
                if !t.is_scalar() {
                    return Err(self.err(span, "cannot negate an array".into()));
                }
                t
            }
            ExprKind::Bin(..) => unreachable!("handled by infer_bin"),
            ExprKind::Gt(lhs, rhs) => {
                self.binop_operands(span, None, lhs, rhs)?;
                Type::scalar(Sort::Int)
            }
            ExprKind::Eq(lhs, rhs) => {
                let sort = self.binop_operands(span, None, lhs, rhs)?;
                if sort == Sort::Real {
                    return Err(self.err(
                        span,
                        "REAL equality is undecidable; compare with '>' or use choose".into(),
                    ));
                }
                Type::scalar(Sort::Int)
            }
            ExprKind::Iota(inner) => {
                self.check(inner, Some(Type::scalar(Sort::Int)))?;
                Type::scalar(Sort::Real)
            }
            ExprKind::Choose(args) => {
                for a in args {
                    self.check(a, Some(Type::scalar(Sort::Int)))?;
                }
                Type::scalar(Sort::Int)
            }
            ExprKind::Cond(guard, then_e, else_e) => {
                self.check(guard, Some(Type::scalar(Sort::Int)))?;
                let t = self.infer(then_e, expected)?;
                self.check(else_e, Some(t.clone()))?;
                t
            }
            ExprKind::Call(name, args) => {
                if self.externals.contains(name) {
                    if args.len() != 1 {
                        return Err(self.err(span, format!("external '{name}' takes one REAL argument")));
                    }
                    self.check(&mut args[0], Some(Type::scalar(Sort::Real)))?;
                    Type::scalar(Sort::Real)
                } else {
                    let sig = self
                        .sigs
                        .get(name)
                        .cloned()
                        .ok_or_else(|| self.err(span, format!("unknown function '{name}'")))?;
                    let visible = sig.visible_params();
                    if args.len() != visible.len() {
                        return Err(self.err(
                            span,
                            format!(
                                "'{name}' expects {} argument(s), got {}",
                                visible.len(),
                                args.len()
                            ),
                        ));
                    }
                    for (a, t) in args.iter_mut().zip(visible.iter().cloned().collect::<Vec<_>>()) {
                        self.check(a, Some(t))?;
                    }
                    sig.ret.clone()
                }
            }
        };
        e.ty = Some(ty.clone());
        Ok(ty)
    }

    fn infer_bin(&mut self, e: &mut Expr, expected: Option<&Type>) -> Result<Type, SortError> {
        let span = e.span;
        let (op, sort) = {
            let ExprKind::Bin(op, lhs, rhs) = &mut e.kind else {
                unreachable!("caller matched Bin");
            };
            (*op, self.binop_operands(span, expected, lhs, rhs)?)
        };
        let ty = match (sort, op) {
            (Sort::Real, _) => Type::scalar(Sort::Real),
            (Sort::Int, BinOp::Add | BinOp::Sub) => Type::scalar(Sort::Int),
            (Sort::Int, BinOp::Div) => {
                return Err(self.err(span, "INTEGER division is not defined".into()))
            }
            (Sort::Int, BinOp::Mul) => {
                self.elaborate_const_mul(e)?;
                Type::scalar(Sort::Int)
            }
        };
        e.ty = Some(ty.clone());
        Ok(ty)
    }

    /// Infers a common scalar sort for two operands. The side whose leaves
    /// are all literals is checked last so it adopts the other side's sort.
    fn binop_operands(
        &mut self,
        span: Span,
        expected: Option<&Type>,
        lhs: &mut Expr,
        rhs: &mut Expr,
    ) -> Result<Sort, SortError> {
        if let Some(t) = expected {
            if t.is_scalar() {
                self.check(lhs, Some(t.clone()))?;
                self.check(rhs, Some(t.clone()))?;
                return Ok(t.sort);
            }
        }
        let (first, second) = if lit_only(lhs) && !lit_only(rhs) {
            (rhs, lhs)
        } else {
            (lhs, rhs)
        };
        let t = self.infer(first, None)?;
        if !t.is_scalar() {
            return Err(self.err(span, "operator needs scalar operands".into()));
        }
        self.check(second, Some(t.clone()))?;
        Ok(t.sort)
    }

    /// Rewrites `k * e` / `e * k` (INTEGER, literal k with |k| <= 2^16) into
    /// a balanced addition chain; rejects other INTEGER multiplications.
    fn elaborate_const_mul(&self, e: &mut Expr) -> Result<(), SortError> {
        let span = e.span;
        let ExprKind::Bin(BinOp::Mul, lhs, rhs) = &e.kind else {
            unreachable!("caller matched Mul");
        };
        let (k, body) = match (const_of(lhs), const_of(rhs)) {
            (Some(k), _) => (k, rhs.as_ref().clone()),
            (None, Some(k)) => (k, lhs.as_ref().clone()),
            (None, None) => {
                return Err(self.err(
                    span,
                    "INTEGER multiplication needs a literal constant operand".into(),
                ))
            }
        };
        if k.magnitude().to_u64().map_or(true, |m| m > MAX_INT_MUL) {
            return Err(self.err(
                span,
                format!("integer multiplication constant exceeds {MAX_INT_MUL}"),
            ));
        }
        let negative = k.is_negative();
        let chain = addition_chain(&k.abs(), &body, span);
        e.kind = if negative {
            ExprKind::Neg(Box::new(chain))
        } else {
            chain.kind
        };
        Ok(())
    }
}

/// True when every leaf of the expression is a literal.
fn lit_only(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Lit(_) => true,
        ExprKind::Neg(i) => lit_only(i),
        ExprKind::Bin(_, a, b) => lit_only(a) && lit_only(b),
        _ => false,
    }
}

/// Literal constant of an expression, looking through negation.
fn const_of(e: &Expr) -> Option<BigInt> {
    match &e.kind {
        ExprKind::Lit(n) => Some(n.clone()),
        ExprKind::Neg(i) => const_of(i).map(|n| -n),
        _ => None,
    }
}

/// k-fold sum of `body` as a balanced tree (depth log k).
fn addition_chain(k: &BigInt, body: &Expr, span: Span) -> Expr {
    let mut e = if k.is_zero() {
        Expr { kind: ExprKind::Lit(BigInt::zero()), span, ty: Some(Type::scalar(Sort::Int)) }
    } else {
        let half: BigInt = k >> 1;
        if half.is_zero() {
            body.clone()
        } else {
            let sub = addition_chain(&half, body, span);
            let doubled = Expr {
                kind: ExprKind::Bin(BinOp::Add, Box::new(sub.clone()), Box::new(sub)),
                span,
                ty: Some(Type::scalar(Sort::Int)),
            };
            if (k & BigInt::from(1)) == BigInt::zero() {
                doubled
            } else {
                Expr {
                    kind: ExprKind::Bin(BinOp::Add, Box::new(doubled), Box::new(body.clone())),
                    span,
                    ty: Some(Type::scalar(Sort::Int)),
                }
            }
        }
    };
    e.ty = Some(Type::scalar(Sort::Int));
    e
}
