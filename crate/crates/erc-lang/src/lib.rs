//! A small imperative language over exact reals and unbounded integers.
//!
//! Programs are function definitions in a WHILE language with two sorts.
//! INTEGER expressions are linear (constant multiples only) and totally
//! ordered; REAL expressions form a field with a partial order test that
//! diverges on equality, so branching on reals goes through the multivalued
//! `choose` primitive. REAL-valued scalar functions declare a leading
//! INTEGER precision parameter and promise their result within 2^p of the
//! exact value; call sites omit that argument and the evaluator closes the
//! loop with an interval limit, so composed results stay exact.
//!
//! Pipeline: [`parse`] text into an AST, [`check_program`] sorts (which also
//! elaborates constant multiplications into addition chains), then
//! [`run_program`] under a step budget, precision floor and choice policy.
//! Every run yields a deterministic event trace; [`eval_consistency_check`]
//! replays a run at two precisions and compares the traces.

mod ast;
mod check;
mod consistency;
mod desugar;
mod eval;
mod lexer;
mod parser;
pub mod testfn;
mod trace;

pub use ast::{
    Annotation, AnnotKind, BinOp, Block, Expr, ExprKind, FunctionDef, LValue, Param,
    Program, Sort, Span, Stmt, StmtKind, Type,
};
pub use check::{check_program, CheckedProgram, FnSig, SortError, MAX_INT_MUL};
pub use consistency::{eval_consistency_check, ConsistencyReport};
pub use desugar::desugar_choose_assign;
pub use eval::{
    run_program, ExternalFn, ExternalFns, Machine, ResultRepr, RunConfig, RunError,
    RunOutcome, Value, MAX_IOTA_EXP, RECURSION_LIMIT,
};
pub use lexer::{lex, Tok, Token};
pub use parser::parse;
pub use trace::{Site, TraceBuf, TraceRecord};

pub use exact_core::{ChoicePolicy, EvalBudget, Exhaustion};

/// Lexical or grammatical error, with the source position that caused it.
#[derive(Debug, Clone)]
pub struct SyntaxError {
    pub file: String,
    pub span: Span,
    pub msg: String,
}

impl std::fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}:{}:{}: syntax error: {}",
            self.file, self.span.line, self.span.col, self.msg
        )
    }
}

impl std::error::Error for SyntaxError {}
