//! Syntax tree for the two-sorted imperative language.
//!
//! INTEGER expressions are linear (multiplication only by literal
//! constants) and totally comparable; REAL expressions form a field with a
//! partial order test. The only bridge between the sorts is `iota(n) = 2^n`.

use num_bigint::BigInt;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sort {
    Int,
    Real,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => write!(f, "INTEGER"),
            Sort::Real => write!(f, "REAL"),
        }
    }
}

/// Scalar sort or fixed-length array of it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Type {
    pub sort: Sort,
    pub len: Option<usize>,
}

impl Type {
    pub fn scalar(sort: Sort) -> Self {
        Type { sort, len: None }
    }

    pub fn is_scalar(&self) -> bool {
        self.len.is_none()
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.len {
            None => write!(f, "{}", self.sort),
            Some(n) => write!(f, "{}[{}]", self.sort, n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    /// Filled by the sort checker; literals are polymorphic until then.
    pub ty: Option<Type>,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span, ty: None }
    }

    /// Sort after checking; panics on unchecked trees.
    pub fn sort(&self) -> Sort {
        self.ty.as_ref().expect("expression not sort-checked").sort
    }
}

#[derive(Clone, Debug)]
pub enum ExprKind {
    Lit(BigInt),
    Var(String),
    /// Array element; the base is always a variable.
    Index(String, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// lhs > rhs. Total on INTEGER; on REAL diverges for equal values.
    Gt(Box<Expr>, Box<Expr>),
    /// Total INTEGER equality (rejected on REAL).
    Eq(Box<Expr>, Box<Expr>),
    /// 2^e for an INTEGER argument.
    Iota(Box<Expr>),
    /// Index of some true branch; multivalued.
    Choose(Vec<Expr>),
    /// guard ? then : else over a total 0/1 guard.
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

#[derive(Clone, Debug)]
pub struct LValue {
    pub name: String,
    pub index: Option<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct Block(pub Vec<Stmt>);

#[derive(Clone, Debug)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub enum StmtKind {
    Decl {
        ty: Type,
        name: String,
        init: Option<Expr>,
    },
    Assign {
        target: LValue,
        value: Expr,
    },
    If {
        guard: Expr,
        then_blk: Block,
        else_blk: Option<Block>,
    },
    While {
        guard: Expr,
        body: Block,
        annots: Vec<Annotation>,
    },
    Return(Expr),
}

/// Verification annotation kinds; loops take invariant/variant/epsilon,
/// functions take pre/post.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnnotKind {
    Pre,
    Post,
    Invariant,
    Variant,
    Epsilon,
}

impl AnnotKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            AnnotKind::Pre => "pre",
            AnnotKind::Post => "post",
            AnnotKind::Invariant => "invariant",
            AnnotKind::Variant => "variant",
            AnnotKind::Epsilon => "epsilon",
        }
    }
}

/// Raw annotation text; the verifier parses it with its own formula grammar.
#[derive(Clone, Debug)]
pub struct Annotation {
    pub kind: AnnotKind,
    pub text: String,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Clone, Debug)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Block,
    pub annots: Vec<Annotation>,
    pub span: Span,
}

impl FunctionDef {
    /// Scalar-REAL functions carry a leading precision parameter that call
    /// sites omit; their visible arity is one less than the parameter list.
    pub fn has_precision_param(&self) -> bool {
        self.ret == Type::scalar(Sort::Real)
    }

    pub fn annotation(&self, kind: AnnotKind) -> Option<&Annotation> {
        self.annots.iter().find(|a| a.kind == kind)
    }
}

#[derive(Clone, Debug)]
pub struct Program {
    pub file: String,
    pub funs: Vec<FunctionDef>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.funs.iter().find(|f| f.name == name)
    }
}
