//! Expansion of multivalued assignments.
//!
//! `x := choose(g0, .., g(n-1))` abbreviates a nested conditional that
//! stores a literal in each arm. The binary form is
//!
//! ```text
//! IF choose(g0, g1) THEN x := 1 ELSE x := 0
//! ```
//!
//! and each wider form peels off the last branch:
//!
//! ```text
//! IF choose(g0, .., g(n-1)) = n-1 THEN x := n-1 ELSE <expansion of n-1>
//! ```
//!
//! The inner conditionals re-evaluate a narrower choice, so for three or
//! more branches the expansion may resolve the inner choice independently;
//! no consistency between the outer and inner resolutions is promised, and
//! the expanded program traces one extra choice record whenever an outer
//! test fails. The binary expansion reuses the original choose expression
//! at the original site and is trace-identical to the direct assignment.

use crate::ast::*;
use num_bigint::BigInt;

/// Expands an assignment whose right side is a `choose`; any other
/// statement is returned unchanged. Expansion preserves sort-checking:
/// the produced nodes carry INTEGER types.
pub fn desugar_choose_assign(stmt: &Stmt) -> Stmt {
    match &stmt.kind {
        StmtKind::Assign { target, value } => match &value.kind {
            ExprKind::Choose(branches) => expand(target, branches, value.span),
            _ => stmt.clone(),
        },
        _ => stmt.clone(),
    }
}

fn expand(target: &LValue, branches: &[Expr], span: Span) -> Stmt {
    let n = branches.len();
    debug_assert!(n >= 2, "choose arity");
    let full_choice = int_expr(ExprKind::Choose(branches.to_vec()), span);
    if n == 2 {
        return if_stmt(
            full_choice,
            assign_lit(target, 1, span),
            assign_lit(target, 0, span),
            span,
        );
    }
    let guard = int_expr(
        ExprKind::Eq(Box::new(full_choice), Box::new(lit((n - 1) as i64, span))),
        span,
    );
    if_stmt(
        guard,
        assign_lit(target, (n - 1) as i64, span),
        expand(target, &branches[..n - 1], span),
        span,
    )
}

fn int_expr(kind: ExprKind, span: Span) -> Expr {
    Expr { kind, span, ty: Some(Type::scalar(Sort::Int)) }
}

fn lit(n: i64, span: Span) -> Expr {
    int_expr(ExprKind::Lit(BigInt::from(n)), span)
}

fn assign_lit(target: &LValue, n: i64, span: Span) -> Stmt {
    Stmt {
        kind: StmtKind::Assign { target: target.clone(), value: lit(n, span) },
        span,
    }
}

fn if_stmt(guard: Expr, then_stmt: Stmt, else_stmt: Stmt, span: Span) -> Stmt {
    Stmt {
        kind: StmtKind::If {
            guard,
            then_blk: Block(vec![then_stmt]),
            else_blk: Some(Block(vec![else_stmt])),
        },
        span,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn choose_assign(n: usize) -> Stmt {
        let span = Span::new(3, 5);
        let branches: Vec<Expr> = (0..n)
            .map(|i| {
                int_expr(
                    ExprKind::Gt(
                        Box::new(lit(i as i64, span)),
                        Box::new(lit(0, span)),
                    ),
                    span,
                )
            })
            .collect();
        Stmt {
            kind: StmtKind::Assign {
                target: LValue { name: "x".into(), index: None, span },
                value: int_expr(ExprKind::Choose(branches), span),
            },
            span,
        }
    }

    #[test]
    fn binary_becomes_a_single_conditional() {
        let out = desugar_choose_assign(&choose_assign(2));
        let StmtKind::If { guard, then_blk, else_blk } = &out.kind else {
            panic!("expected IF");
        };
        assert!(matches!(&guard.kind, ExprKind::Choose(bs) if bs.len() == 2));
        assert_eq!(then_blk.0.len(), 1);
        assert!(matches!(
            &then_blk.0[0].kind,
            StmtKind::Assign { value, .. } if matches!(&value.kind, ExprKind::Lit(n) if *n == BigInt::from(1))
        ));
        let else_blk = else_blk.as_ref().unwrap();
        assert!(matches!(
            &else_blk.0[0].kind,
            StmtKind::Assign { value, .. } if matches!(&value.kind, ExprKind::Lit(n) if *n == BigInt::from(0))
        ));
    }

    #[test]
    fn ternary_peels_the_last_branch() {
        let out = desugar_choose_assign(&choose_assign(3));
        // IF choose(g0,g1,g2) = 2 THEN x := 2 ELSE IF choose(g0,g1) ...
        let StmtKind::If { guard, then_blk, else_blk } = &out.kind else {
            panic!("expected IF");
        };
        let ExprKind::Eq(l, r) = &guard.kind else { panic!("expected =") };
        assert!(matches!(&l.kind, ExprKind::Choose(bs) if bs.len() == 3));
        assert!(matches!(&r.kind, ExprKind::Lit(n) if *n == BigInt::from(2)));
        assert!(matches!(
            &then_blk.0[0].kind,
            StmtKind::Assign { value, .. } if matches!(&value.kind, ExprKind::Lit(n) if *n == BigInt::from(2))
        ));
        let inner = &else_blk.as_ref().unwrap().0[0];
        let StmtKind::If { guard, .. } = &inner.kind else { panic!("expected inner IF") };
        assert!(matches!(&guard.kind, ExprKind::Choose(bs) if bs.len() == 2));
    }

    #[test]
    fn non_choose_assignments_are_untouched() {
        let span = Span::new(1, 1);
        let stmt = Stmt {
            kind: StmtKind::Assign {
                target: LValue { name: "x".into(), index: None, span },
                value: lit(5, span),
            },
            span,
        };
        let out = desugar_choose_assign(&stmt);
        assert!(matches!(
            &out.kind,
            StmtKind::Assign { value, .. } if matches!(&value.kind, ExprKind::Lit(n) if *n == BigInt::from(5))
        ));
    }

    #[test]
    fn spans_survive_expansion() {
        let out = desugar_choose_assign(&choose_assign(2));
        assert_eq!(out.span, Span::new(3, 5));
        let StmtKind::If { guard, .. } = &out.kind else { panic!() };
        assert_eq!(guard.span, Span::new(3, 5));
    }
}
