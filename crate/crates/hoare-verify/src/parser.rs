//! Parser for the assertion language, shared by source annotations and
//! stored condition (`.vc`) files.
//!
//! Grammar, loosest binding first:
//!
//!   formula  := disjunct ("->" formula)?            right associative
//!   disjunct := conjunct ("||" conjunct)*
//!   conjunct := unary ("&&" unary)*
//!   unary    := "!" unary | quantifier | atom
//!   quant    := ("forall" | "exists") IDENT ":" sort "." formula
//!   atom     := "true" | "cont" "(" IDENT ")"
//!             | "uniq" "(" IDENT "," term "," term ")"
//!             | comparison | "(" formula ")"
//!   cmp      := side ( ">" | "<" | ">=" | "<=" | "=" ) side
//!   side     := "|" term "|" | term
//!   term     := mult (("+" | "-") mult)*
//!   mult     := signed (("*" | "/") signed)*
//!   signed   := "-" signed | primary
//!   primary  := INT | IDENT | IDENT "(" term ")" | "iota" "(" term ")"
//!             | "(" term ")"
//!
//! Comparison chains are not supported; write the conjunction out.
//! Absolute value is a surface form that expands at the comparison:
//! `|t| > s` becomes `t > s || -t > s`, `s > |t|` becomes
//! `s > t && s > -t`, and likewise for `>=`; the reflected operators
//! `<` and `<=` first swap their sides. Bars on both sides, or inside
//! arithmetic, are rejected. Division requires an integer literal
//! denominator; a literal-over-literal fraction like `3/16` denotes a
//! rational constant.
//!
//! Sorts come from the environment. Integer literals are flexible and
//! adopt the sort of the nearest non-literal context; an INTEGER term
//! meeting a REAL one is embedded by an explicit cast, exactly as the
//! condition generator does, so parsed and generated atoms agree
//! structurally.

use crate::formula::Formula;
use crate::term::{FSort, Term};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::BTreeMap;
use std::fmt;

/// Sorts for the free variables and function symbols a formula may use.
#[derive(Clone, Debug, Default)]
pub struct SortEnv {
    pub vars: BTreeMap<String, FSort>,
    /// Unary function symbols, argument sort to result sort. Results are
    /// always REAL here.
    pub funs: BTreeMap<String, (FSort, FSort)>,
}

/// Parse failure with a character offset into the given text.
#[derive(Clone, Debug)]
pub struct ParseError {
    pub msg: String,
    pub offset: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.offset + 1, self.msg)
    }
}

impl std::error::Error for ParseError {}

/// A stored condition file: declared variables (the implicit universal
/// prefix, in order), declared function symbols, and the formula.
#[derive(Clone, Debug)]
pub struct VcFile {
    pub vars: Vec<(String, FSort)>,
    pub funs: BTreeMap<String, (FSort, FSort)>,
    pub formula: Formula,
}

impl VcFile {
    /// The formula closed under its declared variables.
    pub fn closed(&self) -> Formula {
        self.formula.clone().forall_closure(&self.vars)
    }
}

/// Parses one formula, e.g. an annotation body.
pub fn parse_formula(text: &str, env: &SortEnv) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, env)?;
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

/// Parses one term, e.g. a variant or epsilon annotation. A term built
/// from literals alone adopts the hint sort, defaulting to INTEGER
/// unless it contains a fraction.
pub fn parse_term(
    text: &str,
    env: &SortEnv,
    hint: Option<FSort>,
) -> Result<(Term, FSort), ParseError> {
    let mut p = Parser::new(text, env)?;
    let inf = p.term()?;
    p.expect_eof()?;
    let sort = match &inf {
        Inf::Fixed(t) => t.sort(),
        Inf::Flex(tree) => hint.unwrap_or(if tree.has_fraction() {
            FSort::Real
        } else {
            FSort::Int
        }),
    };
    let t = p.force(inf, sort, 0)?;
    Ok((t, sort))
}

/// Parses a stored condition file: `#` comments, `var`/`fun`
/// declarations, the `formula` keyword, then the formula itself.
pub fn parse_vc_file(text: &str) -> Result<VcFile, ParseError> {
    let mut env = SortEnv::default();
    let mut vars = Vec::new();
    let mut p = Parser::new(text, &env)?;
    loop {
        match p.peek().clone() {
            Tok::Ident(w) if w == "var" => {
                p.advance();
                let name = p.ident("variable name")?;
                p.expect(&Tok::Colon)?;
                let sort = p.sort()?;
                if env.vars.insert(name.clone(), sort).is_some() {
                    return Err(p.err(format!("variable '{name}' declared twice")));
                }
                vars.push((name, sort));
            }
            Tok::Ident(w) if w == "fun" => {
                p.advance();
                let name = p.ident("function name")?;
                p.expect(&Tok::Colon)?;
                let arg = p.sort()?;
                p.expect(&Tok::Arrow)?;
                let ret = p.sort()?;
                if ret != FSort::Real {
                    return Err(p.err("function symbols must return REAL".into()));
                }
                if env.funs.insert(name.clone(), (arg, ret)).is_some() {
                    return Err(p.err(format!("function '{name}' declared twice")));
                }
            }
            Tok::Ident(w) if w == "formula" => {
                p.advance();
                break;
            }
            _ => return Err(p.err("expected 'var', 'fun', or 'formula'".into())),
        }
    }
    p.env = env.clone();
    let formula = p.formula()?;
    p.expect_eof()?;
    Ok(VcFile { vars, funs: env.funs, formula })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(BigInt),
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Pipe,
    OrOr,
    AndAnd,
    Arrow,
    Gt,
    Lt,
    Ge,
    Le,
    Eq,
    Plus,
    Minus,
    Star,
    Slash,
    Bang,
    Eof,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let at = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                s.push(chars[i]);
                i += 1;
            }
            out.push((Tok::Ident(s), at));
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                i += 1;
            }
            out.push((Tok::Int(s.parse().expect("digit run parses")), at));
            continue;
        }
        let two = if i + 1 < chars.len() {
            Some((c, chars[i + 1]))
        } else {
            None
        };
        let (tok, len) = match (c, two) {
            (_, Some(('|', '|'))) => (Tok::OrOr, 2),
            (_, Some(('&', '&'))) => (Tok::AndAnd, 2),
            (_, Some(('-', '>'))) => (Tok::Arrow, 2),
            (_, Some(('>', '='))) => (Tok::Ge, 2),
            (_, Some(('<', '='))) => (Tok::Le, 2),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            ('.', _) => (Tok::Dot, 1),
            (':', _) => (Tok::Colon, 1),
            ('|', _) => (Tok::Pipe, 1),
            ('>', _) => (Tok::Gt, 1),
            ('<', _) => (Tok::Lt, 1),
            ('=', _) => (Tok::Eq, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('!', _) => (Tok::Bang, 1),
            _ => {
                return Err(ParseError {
                    msg: format!("unexpected character '{c}'"),
                    offset: at,
                })
            }
        };
        out.push((tok, at));
        i += len;
    }
    out.push((Tok::Eof, chars.len()));
    Ok(out)
}

/// A term whose sort is either fixed or still open because every leaf is
/// a literal. Flexible terms keep their structure; nothing is evaluated.
enum Inf {
    Fixed(Term),
    Flex(FTree),
}

/// Literal-only term structure awaiting a sort.
#[derive(Clone)]
enum FTree {
    Int(BigInt),
    Rat(BigRational),
    Add(Box<FTree>, Box<FTree>),
    Sub(Box<FTree>, Box<FTree>),
    Mul(Box<FTree>, Box<FTree>),
    Neg(Box<FTree>),
}

impl FTree {
    fn has_fraction(&self) -> bool {
        match self {
            FTree::Int(_) => false,
            FTree::Rat(_) => true,
            FTree::Add(a, b) | FTree::Sub(a, b) | FTree::Mul(a, b) => {
                a.has_fraction() || b.has_fraction()
            }
            FTree::Neg(a) => a.has_fraction(),
        }
    }

    fn realize(&self, sort: FSort) -> Option<Term> {
        Some(match self {
            FTree::Int(n) => match sort {
                FSort::Int => Term::ILit(n.clone()),
                FSort::Real => Term::RLit(BigRational::from_integer(n.clone())),
            },
            FTree::Rat(q) => match sort {
                FSort::Int => return None,
                FSort::Real => Term::RLit(q.clone()),
            },
            FTree::Add(a, b) => Term::Add(Box::new(a.realize(sort)?), Box::new(b.realize(sort)?)),
            FTree::Sub(a, b) => Term::Sub(Box::new(a.realize(sort)?), Box::new(b.realize(sort)?)),
            FTree::Mul(a, b) => Term::Mul(Box::new(a.realize(sort)?), Box::new(b.realize(sort)?)),
            FTree::Neg(a) => Term::Neg(Box::new(a.realize(sort)?)),
        })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    i: usize,
    env: SortEnv,
    /// Quantifier binders currently in scope, innermost last.
    binders: Vec<(String, FSort)>,
}

impl Parser {
    fn new(text: &str, env: &SortEnv) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: tokenize(text)?,
            i: 0,
            env: env.clone(),
            binders: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn offset(&self) -> usize {
        self.toks[self.i].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err(&self, msg: String) -> ParseError {
        ParseError { msg, offset: self.offset() }
    }

    fn expect(&mut self, want: &Tok) -> Result<(), ParseError> {
        if self.peek() == want {
            self.advance();
            Ok(())
        } else {
            Err(self.err(format!("expected {want:?}, found {:?}", self.peek())))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            Err(self.err(format!("trailing input: {:?}", self.peek())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            other => Err(self.err(format!("expected {what}, found {other:?}"))),
        }
    }

    fn sort(&mut self) -> Result<FSort, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "INTEGER" => {
                self.advance();
                Ok(FSort::Int)
            }
            Tok::Ident(s) if s == "REAL" => {
                self.advance();
                Ok(FSort::Real)
            }
            other => Err(self.err(format!("expected INTEGER or REAL, found {other:?}"))),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunct()?;
        if matches!(self.peek(), Tok::Arrow) {
            self.advance();
            let rhs = self.formula()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunct(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.conjunct()?];
        while matches!(self.peek(), Tok::OrOr) {
            self.advance();
            parts.push(self.conjunct()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one element")
        } else {
            Formula::Or(parts)
        })
    }

    fn conjunct(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.unary()?];
        while matches!(self.peek(), Tok::AndAnd) {
            self.advance();
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one element")
        } else {
            Formula::And(parts)
        })
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.advance();
                Ok(Formula::Not(Box::new(self.unary()?)))
            }
            Tok::Ident(w) if w == "forall" || w == "exists" => {
                self.advance();
                let name = self.ident("bound variable")?;
                self.expect(&Tok::Colon)?;
                let sort = self.sort()?;
                self.expect(&Tok::Dot)?;
                self.binders.push((name.clone(), sort));
                let body = self.formula();
                self.binders.pop();
                let body = Box::new(body?);
                Ok(if w == "forall" {
                    Formula::Forall(name, sort, body)
                } else {
                    Formula::Exists(name, sort, body)
                })
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Ident(w) if w == "true" => {
                self.advance();
                Ok(Formula::TrueF)
            }
            Tok::Ident(w) if w == "cont" => {
                self.advance();
                self.expect(&Tok::LParen)?;
                let f = self.fn_name()?;
                self.expect(&Tok::RParen)?;
                Ok(Formula::Cont(f))
            }
            Tok::Ident(w) if w == "uniq" => {
                self.advance();
                self.expect(&Tok::LParen)?;
                let f = self.fn_name()?;
                self.expect(&Tok::Comma)?;
                let a = self.term()?;
                let a = self.force(a, FSort::Real, self.offset())?;
                self.expect(&Tok::Comma)?;
                let b = self.term()?;
                let b = self.force(b, FSort::Real, self.offset())?;
                self.expect(&Tok::RParen)?;
                Ok(Formula::Uniq(f, a, b))
            }
            Tok::LParen => {
                // Either a parenthesized term starting a comparison or a
                // parenthesized formula; try the comparison first.
                let save = self.i;
                match self.comparison() {
                    Ok(f) => Ok(f),
                    Err(cmp_err) => {
                        self.i = save;
                        self.advance();
                        let inner = self.formula().map_err(|sub_err| {
                            if sub_err.offset >= cmp_err.offset {
                                sub_err
                            } else {
                                cmp_err.clone()
                            }
                        })?;
                        self.expect(&Tok::RParen)?;
                        Ok(inner)
                    }
                }
            }
            _ => self.comparison(),
        }
    }

    /// A function symbol position: the name must be declared or is taken
    /// as an external REAL -> REAL symbol.
    fn fn_name(&mut self) -> Result<String, ParseError> {
        let name = self.ident("function name")?;
        if let Some((arg, _)) = self.env.funs.get(&name) {
            if *arg != FSort::Real {
                return Err(self.err(format!(
                    "'{name}' maps {arg}, not REAL, and cannot be constrained here"
                )));
            }
        }
        Ok(name)
    }

    fn comparison(&mut self) -> Result<Formula, ParseError> {
        let (labs, lterm) = self.side()?;
        let op = match self.peek() {
            Tok::Gt | Tok::Lt | Tok::Ge | Tok::Le | Tok::Eq => self.advance(),
            other => return Err(self.err(format!("expected a comparison, found {other:?}"))),
        };
        let at = self.offset();
        let (rabs, rterm) = self.side()?;
        // Reflected operators swap sides so only >, >=, = remain.
        let (op, labs, lterm, rabs, rterm) = match op {
            Tok::Lt => (Tok::Gt, rabs, rterm, labs, lterm),
            Tok::Le => (Tok::Ge, rabs, rterm, labs, lterm),
            other => (other, labs, lterm, rabs, rterm),
        };
        if labs && rabs {
            return Err(ParseError {
                msg: "absolute values on both sides of a comparison are not supported".into(),
                offset: at,
            });
        }
        let sort = self.join_sort(&lterm, &rterm);
        let l = self.force(lterm, sort, at)?;
        let r = self.force(rterm, sort, at)?;
        Ok(build_comparison(&op, labs, l, rabs, r).map_err(|msg| ParseError { msg, offset: at })?)
    }

    /// The common sort of two comparison or binop sides: any fixed side
    /// wins, mixed fixed sides go to REAL, literal-only sides stay
    /// INTEGER unless a fraction forces REAL.
    fn join_sort(&self, a: &Inf, b: &Inf) -> FSort {
        match (a, b) {
            (Inf::Fixed(x), Inf::Fixed(y)) => {
                if x.sort() == y.sort() {
                    x.sort()
                } else {
                    FSort::Real
                }
            }
            (Inf::Fixed(x), Inf::Flex(_)) | (Inf::Flex(_), Inf::Fixed(x)) => x.sort(),
            (Inf::Flex(x), Inf::Flex(y)) => {
                if x.has_fraction() || y.has_fraction() {
                    FSort::Real
                } else {
                    FSort::Int
                }
            }
        }
    }

    /// One side of a comparison, possibly wrapped in absolute value bars.
    fn side(&mut self) -> Result<(bool, Inf), ParseError> {
        if matches!(self.peek(), Tok::Pipe) {
            self.advance();
            let t = self.term()?;
            self.expect(&Tok::Pipe)?;
            Ok((true, t))
        } else {
            Ok((false, self.term()?))
        }
    }

    fn term(&mut self) -> Result<Inf, ParseError> {
        let mut acc = self.mult()?;
        loop {
            let plus = match self.peek() {
                Tok::Plus => true,
                Tok::Minus => false,
                _ => break,
            };
            let at = self.offset();
            self.advance();
            let rhs = self.mult()?;
            acc = self.combine(acc, rhs, if plus { BinKind::Add } else { BinKind::Sub }, at)?;
        }
        Ok(acc)
    }

    fn mult(&mut self) -> Result<Inf, ParseError> {
        let mut acc = self.signed()?;
        loop {
            let star = match self.peek() {
                Tok::Star => true,
                Tok::Slash => false,
                _ => break,
            };
            let at = self.offset();
            self.advance();
            let rhs = self.signed()?;
            if star {
                acc = self.combine(acc, rhs, BinKind::Mul, at)?;
            } else {
                acc = self.divide(acc, rhs, at)?;
            }
        }
        Ok(acc)
    }

    fn signed(&mut self) -> Result<Inf, ParseError> {
        if matches!(self.peek(), Tok::Minus) {
            self.advance();
            return Ok(match self.signed()? {
                Inf::Fixed(t) => Inf::Fixed(Term::Neg(Box::new(t))),
                Inf::Flex(f) => Inf::Flex(FTree::Neg(Box::new(f))),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Inf, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(Inf::Flex(FTree::Int(n)))
            }
            Tok::LParen => {
                self.advance();
                let t = self.term()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(w) if w == "iota" => {
                self.advance();
                self.expect(&Tok::LParen)?;
                let at = self.offset();
                let arg = self.term()?;
                let arg = self.force(arg, FSort::Int, at)?;
                self.expect(&Tok::RParen)?;
                Ok(Inf::Fixed(Term::Iota(Box::new(arg))))
            }
            Tok::Ident(name) => {
                self.advance();
                if matches!(self.peek(), Tok::LParen) {
                    self.advance();
                    let (arg_sort, _) = *self.env.funs.get(&name).ok_or_else(|| {
                        self.err(format!("unknown function symbol '{name}'"))
                    })?;
                    let at = self.offset();
                    let arg = self.term()?;
                    let arg = self.force(arg, arg_sort, at)?;
                    self.expect(&Tok::RParen)?;
                    return Ok(Inf::Fixed(Term::App(name, vec![arg])));
                }
                let sort = self
                    .binders
                    .iter()
                    .rev()
                    .find(|(b, _)| *b == name)
                    .map(|(_, s)| *s)
                    .or_else(|| self.env.vars.get(&name).copied())
                    .ok_or_else(|| self.err(format!("unknown variable '{name}'")))?;
                Ok(Inf::Fixed(Term::Var(name, sort)))
            }
            other => Err(self.err(format!("expected a term, found {other:?}"))),
        }
    }

    fn combine(&self, a: Inf, b: Inf, kind: BinKind, at: usize) -> Result<Inf, ParseError> {
        match (a, b) {
            (Inf::Flex(x), Inf::Flex(y)) => Ok(Inf::Flex(match kind {
                BinKind::Add => FTree::Add(Box::new(x), Box::new(y)),
                BinKind::Sub => FTree::Sub(Box::new(x), Box::new(y)),
                BinKind::Mul => FTree::Mul(Box::new(x), Box::new(y)),
            })),
            (a, b) => {
                let sort = self.join_sort(&a, &b);
                let l = self.force(a, sort, at)?;
                let r = self.force(b, sort, at)?;
                Ok(Inf::Fixed(match kind {
                    BinKind::Add => Term::Add(Box::new(l), Box::new(r)),
                    BinKind::Sub => Term::Sub(Box::new(l), Box::new(r)),
                    BinKind::Mul => Term::Mul(Box::new(l), Box::new(r)),
                }))
            }
        }
    }

    /// Division: an integer literal denominator. A literal numerator
    /// collapses into a rational constant; anything else divides a REAL
    /// term.
    fn divide(&self, num: Inf, den: Inf, at: usize) -> Result<Inf, ParseError> {
        let d = match den {
            Inf::Flex(FTree::Int(n)) => n,
            _ => {
                return Err(ParseError {
                    msg: "denominator must be an integer literal".into(),
                    offset: at,
                })
            }
        };
        if d.is_zero() {
            return Err(ParseError { msg: "division by zero".into(), offset: at });
        }
        match num {
            Inf::Flex(FTree::Int(n)) => Ok(Inf::Flex(FTree::Rat(BigRational::new(n, d)))),
            other => {
                let t = self.force(other, FSort::Real, at)?;
                Ok(Inf::Fixed(Term::Div(Box::new(t), d)))
            }
        }
    }

    /// Forces a term to a sort: flexible literals realize at it, an
    /// INTEGER term is cast into REAL, and a REAL term cannot shrink.
    fn force(&self, inf: Inf, sort: FSort, at: usize) -> Result<Term, ParseError> {
        match inf {
            Inf::Flex(f) => f.realize(sort).ok_or(ParseError {
                msg: "fraction in an INTEGER position".into(),
                offset: at,
            }),
            Inf::Fixed(t) => match (t.sort(), sort) {
                (a, b) if a == b => Ok(t),
                (FSort::Int, FSort::Real) => Ok(Term::Cast(Box::new(t))),
                (FSort::Real, FSort::Int) => Err(ParseError {
                    msg: "REAL term in an INTEGER position".into(),
                    offset: at,
                }),
                _ => unreachable!("sorts are two-valued"),
            },
        }
    }
}

enum BinKind {
    Add,
    Sub,
    Mul,
}

/// Builds the canonical atom for `l OP r`, expanding an absolute value
/// on one side. `op` is already one of >, >=, =.
pub(crate) fn build_comparison(
    op: &Tok,
    labs: bool,
    l: Term,
    rabs: bool,
    r: Term,
) -> Result<Formula, String> {
    let strict = matches!(op, Tok::Gt);
    let mk = |a: Term, b: Term| {
        if strict {
            Formula::Gt(a, b)
        } else {
            Formula::Ge(a, b)
        }
    };
    match op {
        Tok::Gt | Tok::Ge => Ok(if labs {
            // |t| > s holds when either signed copy exceeds s.
            Formula::Or(vec![
                mk(l.clone(), r.clone()),
                mk(Term::Neg(Box::new(l)), r),
            ])
        } else if rabs {
            // s > |t| bounds both signed copies.
            Formula::And(vec![
                mk(l.clone(), r.clone()),
                mk(l, Term::Neg(Box::new(r))),
            ])
        } else {
            mk(l, r)
        }),
        Tok::Eq => {
            if labs || rabs {
                Err("absolute value under '=' is not supported".into())
            } else {
                Ok(Formula::EqF(l, r))
            }
        }
        other => Err(format!("not a comparison operator: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::alpha_equivalent;

    fn env() -> SortEnv {
        let mut e = SortEnv::default();
        e.vars.insert("x".into(), FSort::Real);
        e.vars.insert("y".into(), FSort::Real);
        e.vars.insert("k".into(), FSort::Int);
        e.vars.insert("l".into(), FSort::Int);
        e.vars.insert("p".into(), FSort::Int);
        e.funs.insert("f".into(), (FSort::Real, FSort::Real));
        e.funs.insert("M".into(), (FSort::Int, FSort::Real));
        e
    }

    #[test]
    fn literals_adopt_the_sort_of_their_context() {
        let f = parse_formula("x > 2 && k > 2", &env()).expect("parses");
        assert_eq!(
            f,
            Formula::And(vec![
                Formula::Gt(Term::rvar("x"), Term::rlit(2, 1)),
                Formula::Gt(Term::ivar("k"), Term::ilit(2)),
            ])
        );
    }

    #[test]
    fn integer_terms_cast_into_real_contexts() {
        let f = parse_formula("x = y + k", &env()).expect("parses");
        assert_eq!(
            f,
            Formula::EqF(
                Term::rvar("x"),
                Term::Add(
                    Box::new(Term::rvar("y")),
                    Box::new(Term::Cast(Box::new(Term::ivar("k"))))
                )
            )
        );
    }

    #[test]
    fn reflected_comparisons_swap_into_canonical_atoms() {
        let f = parse_formula("k <= l", &env()).expect("parses");
        assert_eq!(f, Formula::Ge(Term::ivar("l"), Term::ivar("k")));
        let g = parse_formula("x < y", &env()).expect("parses");
        assert_eq!(g, Formula::Gt(Term::rvar("y"), Term::rvar("x")));
    }

    #[test]
    fn absolute_value_expands_by_side() {
        let lt = parse_formula("|y| < 1", &env()).expect("parses");
        assert_eq!(
            lt,
            Formula::And(vec![
                Formula::Gt(Term::rlit(1, 1), Term::rvar("y")),
                Formula::Gt(Term::rlit(1, 1), Term::Neg(Box::new(Term::rvar("y")))),
            ])
        );
        let gt = parse_formula("|y| > 1/2", &env()).expect("parses");
        assert_eq!(
            gt,
            Formula::Or(vec![
                Formula::Gt(Term::rvar("y"), Term::rlit(1, 2)),
                Formula::Gt(Term::Neg(Box::new(Term::rvar("y"))), Term::rlit(1, 2)),
            ])
        );
        assert!(parse_formula("|x| > |y|", &env()).is_err());
        assert!(parse_formula("|x| = 1", &env()).is_err());
    }

    #[test]
    fn division_collapses_literal_fractions_only() {
        let f = parse_formula("x > 3/16", &env()).expect("parses");
        assert_eq!(f, Formula::Gt(Term::rvar("x"), Term::rlit(3, 16)));
        let g = parse_formula("(2*x + y) / 3 > 0", &env()).expect("parses");
        let two_x = Term::Mul(Box::new(Term::rlit(2, 1)), Box::new(Term::rvar("x")));
        let sum = Term::Add(Box::new(two_x), Box::new(Term::rvar("y")));
        assert_eq!(
            g,
            Formula::Gt(Term::Div(Box::new(sum), 3.into()), Term::rlit(0, 1))
        );
        assert!(parse_formula("x / y > 0", &env()).is_err());
    }

    #[test]
    fn quantifiers_bind_and_applications_respect_argument_sorts() {
        let f = parse_formula(
            "forall j:INTEGER. ((0 <= j && j < k) -> x >= |M(j)|)",
            &env(),
        )
        .expect("parses");
        match &f {
            Formula::Forall(j, FSort::Int, _) => assert_eq!(j, "j"),
            other => panic!("expected forall, got {other}"),
        }
        // Applying M to a REAL argument must fail; f accepts the cast-free
        // REAL argument.
        assert!(parse_formula("M(x) > 0", &env()).is_err());
        assert!(parse_formula("f(x) > 0", &env()).is_ok());
    }

    #[test]
    fn parenthesized_formulas_and_terms_disambiguate() {
        let f = parse_formula("(x + 1) > 0", &env()).expect("term parens");
        assert!(matches!(f, Formula::Gt(_, _)));
        let g = parse_formula("(x > 0) && (y > 0 || k > 0)", &env()).expect("formula parens");
        assert!(matches!(g, Formula::And(_)));
    }

    #[test]
    fn vc_files_declare_their_prefix_and_close_over_it() {
        let text = "# stored condition\nvar x : REAL\nvar p : INTEGER\nfun f : REAL -> REAL\nformula\ncont(f) -> (iota(p) > x || x > iota(p - 1))\n";
        let vc = parse_vc_file(text).expect("parses");
        assert_eq!(vc.vars.len(), 2);
        let closed = vc.closed();
        let (prefix, _) = closed.strip_forall_prefix();
        assert_eq!(prefix.len(), 2);
        assert!(alpha_equivalent(&closed, &closed));
    }

    #[test]
    fn variant_and_epsilon_terms_parse_with_sort_hints() {
        let (v, s) = parse_term("y - x - iota(p - 1)", &env(), None).expect("parses");
        assert_eq!(s, FSort::Real);
        assert_eq!(
            v,
            Term::Sub(
                Box::new(Term::Sub(Box::new(Term::rvar("y")), Box::new(Term::rvar("x")))),
                Box::new(Term::Iota(Box::new(Term::Sub(
                    Box::new(Term::ivar("p")),
                    Box::new(Term::ilit(1))
                ))))
            )
        );
        let (e, s) = parse_term("1", &env(), Some(FSort::Int)).expect("parses");
        assert_eq!((e, s), (Term::ilit(1), FSort::Int));
        let (q, s) = parse_term("3/16", &env(), None).expect("parses");
        assert_eq!((q, s), (Term::rlit(3, 16), FSort::Real));
    }
}
