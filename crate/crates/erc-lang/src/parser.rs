//! Recursive-descent parser.
//!
//! Grammar (statements end with `;`, blocks use braces):
//!
//! ```text
//! program  := fundef+
//! fundef   := annot* type IDENT "(" params? ")" block
//! param    := type IDENT
//! type     := ("INTEGER" | "REAL") ("[" NAT "]")?
//! stmt     := annot* while | decl | assign | if | return
//! decl     := type IDENT (":=" expr)? ";"
//! assign   := IDENT ("[" expr "]")? ":=" expr ";"
//! if       := "IF" expr "THEN" block ("ELSE" (block | if))?
//! while    := "WHILE" expr "DO" block
//! return   := "RETURN" expr ";"
//! expr     := cmp ("?" expr ":" expr)?
//! cmp      := sum ((">" | "<" | "=") sum)?
//! sum      := term (("+" | "-") term)*
//! term     := factor (("*" | "/") factor)*
//! factor   := "-" factor | primary ("[" expr "]")?
//! primary  := NAT | IDENT | IDENT "(" args ")" | "iota" "(" expr ")"
//!           | "choose" "(" expr ("," expr)+ ")" | "(" expr ")"
//! ```
//!
//! `a < b` is sugar for `b > a`. Scalar-REAL functions must declare a
//! leading INTEGER precision parameter; call sites omit it.

use crate::ast::*;
use crate::lexer::{lex, Tok, Token};
use crate::SyntaxError;

pub fn parse(src: &str, file: &str) -> Result<Program, SyntaxError> {
    let tokens = lex(src, file)?;
    let mut p = Parser { tokens, pos: 0, file: file.to_string() };
    let mut funs = Vec::new();
    while !p.at_end() {
        funs.push(p.fundef()?);
    }
    if funs.is_empty() {
        return Err(p.err_here("empty program"));
    }
    Ok(Program { file: file.to_string(), funs })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    file: String,
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn span(&self) -> Span {
        self.tokens
            .get(self.pos.min(self.tokens.len().saturating_sub(1)))
            .map(|t| t.span)
            .unwrap_or(Span::new(0, 0))
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn err_here(&self, msg: impl Into<String>) -> SyntaxError {
        SyntaxError { file: self.file.clone(), span: self.span(), msg: msg.into() }
    }

    fn eat_punct(&mut self, p: &str) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(Tok::Punct(q)) if *q == p => {
                self.bump();
                Ok(())
            }
            other => Err(self.err_here(format!("expected '{p}', found {}", show(other)))),
        }
    }

    fn eat_keyword(&mut self, k: &str) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(Tok::Keyword(q)) if *q == k => {
                self.bump();
                Ok(())
            }
            other => Err(self.err_here(format!("expected '{k}', found {}", show(other)))),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Keyword(q)) if *q == k)
    }

    fn ident(&mut self) -> Result<(String, Span), SyntaxError> {
        let span = self.span();
        match self.bump().map(|t| t.tok) {
            Some(Tok::Ident(s)) => Ok((s, span)),
            other => Err(SyntaxError {
                file: self.file.clone(),
                span,
                msg: format!("expected identifier, found {}", show(other.as_ref())),
            }),
        }
    }

    fn annotations(&mut self) -> Vec<Annotation> {
        let mut out = Vec::new();
        while let Some(Tok::Annot(kind, text)) = self.peek() {
            let kind = *kind;
            let text = text.clone();
            let span = self.span();
            self.bump();
            out.push(Annotation { kind, text, span });
        }
        out
    }

    fn ty(&mut self) -> Result<Type, SyntaxError> {
        let sort = if self.is_keyword("INTEGER") {
            self.bump();
            Sort::Int
        } else if self.is_keyword("REAL") {
            self.bump();
            Sort::Real
        } else {
            return Err(self.err_here("expected INTEGER or REAL"));
        };
        let len = if self.is_punct("[") {
            self.bump();
            let span = self.span();
            let n = match self.bump().map(|t| t.tok) {
                Some(Tok::Nat(n)) => n,
                other => {
                    return Err(SyntaxError {
                        file: self.file.clone(),
                        span,
                        msg: format!("expected array length, found {}", show(other.as_ref())),
                    })
                }
            };
            self.eat_punct("]")?;
            let n: usize = n.try_into().map_err(|_| SyntaxError {
                file: self.file.clone(),
                span,
                msg: "array length out of range".to_string(),
            })?;
            Some(n)
        } else {
            None
        };
        Ok(Type { sort, len })
    }

    fn fundef(&mut self) -> Result<FunctionDef, SyntaxError> {
        let annots = self.annotations();
        for a in &annots {
            if !matches!(a.kind, AnnotKind::Pre | AnnotKind::Post) {
                return Err(SyntaxError {
                    file: self.file.clone(),
                    span: a.span,
                    msg: format!("annotation '{}' belongs on a loop", a.kind.keyword()),
                });
            }
        }
        let span = self.span();
        let ret = self.ty()?;
        let (name, _) = self.ident()?;
        self.eat_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                let ty = self.ty()?;
                let (pname, _) = self.ident()?;
                params.push(Param { name: pname, ty });
                if self.is_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.eat_punct(")")?;
        if ret == Type::scalar(Sort::Real)
            && params.first().map(|p| &p.ty) != Some(&Type::scalar(Sort::Int))
        {
            return Err(SyntaxError {
                file: self.file.clone(),
                span,
                msg: format!(
                    "REAL function '{name}' must take a leading INTEGER precision parameter"
                ),
            });
        }
        let body = self.block()?;
        Ok(FunctionDef { name, params, ret, body, annots, span })
    }

    fn block(&mut self) -> Result<Block, SyntaxError> {
        self.eat_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if self.at_end() {
                return Err(self.err_here("unterminated block"));
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(Block(stmts))
    }

    fn stmt(&mut self) -> Result<Stmt, SyntaxError> {
        let annots = self.annotations();
        let span = self.span();
        if self.is_keyword("WHILE") {
            for a in &annots {
                if matches!(a.kind, AnnotKind::Pre | AnnotKind::Post) {
                    return Err(SyntaxError {
                        file: self.file.clone(),
                        span: a.span,
                        msg: format!("annotation '{}' belongs on a function", a.kind.keyword()),
                    });
                }
            }
            self.bump();
            let guard = self.expr()?;
            self.eat_keyword("DO")?;
            let body = self.block()?;
            return Ok(Stmt { kind: StmtKind::While { guard, body, annots }, span });
        }
        if let Some(a) = annots.first() {
            return Err(SyntaxError {
                file: self.file.clone(),
                span: a.span,
                msg: "annotations here must precede a WHILE loop".to_string(),
            });
        }
        if self.is_keyword("IF") {
            self.bump();
            return self.if_tail(span);
        }
        if self.is_keyword("RETURN") {
            self.bump();
            let e = self.expr()?;
            self.eat_punct(";")?;
            return Ok(Stmt { kind: StmtKind::Return(e), span });
        }
        if self.is_keyword("INTEGER") || self.is_keyword("REAL") {
            let ty = self.ty()?;
            let (name, _) = self.ident()?;
            let init = if self.is_punct(":=") {
                self.bump();
                Some(self.expr()?)
            } else {
                None
            };
            self.eat_punct(";")?;
            return Ok(Stmt { kind: StmtKind::Decl { ty, name, init }, span });
        }
        // assignment
        let (name, nspan) = self.ident()?;
        let index = if self.is_punct("[") {
            self.bump();
            let e = self.expr()?;
            self.eat_punct("]")?;
            Some(e)
        } else {
            None
        };
        self.eat_punct(":=")?;
        let value = self.expr()?;
        self.eat_punct(";")?;
        Ok(Stmt {
            kind: StmtKind::Assign {
                target: LValue { name, index, span: nspan },
                value,
            },
            span,
        })
    }

    fn if_tail(&mut self, span: Span) -> Result<Stmt, SyntaxError> {
        let guard = self.expr()?;
        self.eat_keyword("THEN")?;
        let then_blk = self.block()?;
        let else_blk = if self.is_keyword("ELSE") {
            self.bump();
            if self.is_keyword("IF") {
                let ispan = self.span();
                self.bump();
                let nested = self.if_tail(ispan)?;
                Some(Block(vec![nested]))
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt { kind: StmtKind::If { guard, then_blk, else_blk }, span })
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let span = self.span();
        let head = self.cmp()?;
        if self.is_punct("?") {
            self.bump();
            let then_e = self.expr()?;
            self.eat_punct(":")?;
            let else_e = self.expr()?;
            return Ok(Expr::new(
                ExprKind::Cond(Box::new(head), Box::new(then_e), Box::new(else_e)),
                span,
            ));
        }
        Ok(head)
    }

    fn cmp(&mut self) -> Result<Expr, SyntaxError> {
        let span = self.span();
        let lhs = self.sum()?;
        let op = match self.peek() {
            Some(Tok::Punct(">")) => ">",
            Some(Tok::Punct("<")) => "<",
            Some(Tok::Punct("=")) => "=",
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.sum()?;
        let kind = match op {
            ">" => ExprKind::Gt(Box::new(lhs), Box::new(rhs)),
            "<" => ExprKind::Gt(Box::new(rhs), Box::new(lhs)),
            _ => ExprKind::Eq(Box::new(lhs), Box::new(rhs)),
        };
        Ok(Expr::new(kind, span))
    }

    fn sum(&mut self) -> Result<Expr, SyntaxError> {
        let span = self.span();
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Punct("+")) => BinOp::Add,
                Some(Tok::Punct("-")) => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::new(ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let span = self.span();
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Punct("*")) => BinOp::Mul,
                Some(Tok::Punct("/")) => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::new(ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, SyntaxError> {
        let span = self.span();
        if self.is_punct("-") {
            self.bump();
            let inner = self.factor()?;
            return Ok(Expr::new(ExprKind::Neg(Box::new(inner)), span));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let span = self.span();
        match self.peek().cloned() {
            Some(Tok::Nat(n)) => {
                self.bump();
                Ok(Expr::new(ExprKind::Lit(n), span))
            }
            Some(Tok::Punct("(")) => {
                self.bump();
                let e = self.expr()?;
                self.eat_punct(")")?;
                Ok(e)
            }
            Some(Tok::Keyword("iota")) => {
                self.bump();
                self.eat_punct("(")?;
                let e = self.expr()?;
                self.eat_punct(")")?;
                Ok(Expr::new(ExprKind::Iota(Box::new(e)), span))
            }
            Some(Tok::Keyword("choose")) => {
                self.bump();
                self.eat_punct("(")?;
                let args = self.args()?;
                if args.len() < 2 {
                    return Err(SyntaxError {
                        file: self.file.clone(),
                        span,
                        msg: "choose needs at least two branches".to_string(),
                    });
                }
                Ok(Expr::new(ExprKind::Choose(args), span))
            }
            Some(Tok::Ident(_)) => {
                let (name, _) = self.ident()?;
                if self.is_punct("(") {
                    self.bump();
                    let args = if self.is_punct(")") { Vec::new() } else { self.args_open()? };
                    self.eat_punct(")")?;
                    return Ok(Expr::new(ExprKind::Call(name, args), span));
                }
                if self.is_punct("[") {
                    self.bump();
                    let idx = self.expr()?;
                    self.eat_punct("]")?;
                    return Ok(Expr::new(ExprKind::Index(name, Box::new(idx)), span));
                }
                Ok(Expr::new(ExprKind::Var(name), span))
            }
            other => Err(self.err_here(format!("expected expression, found {}", show(other.as_ref())))),
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>, SyntaxError> {
        let args = self.args_open()?;
        self.eat_punct(")")?;
        Ok(args)
    }

    fn args_open(&mut self) -> Result<Vec<Expr>, SyntaxError> {
        let mut args = vec![self.expr()?];
        while self.is_punct(",") {
            self.bump();
            args.push(self.expr()?);
        }
        Ok(args)
    }
}

fn show(tok: Option<&Tok>) -> String {
    match tok {
        None => "end of input".to_string(),
        Some(Tok::Ident(s)) => format!("identifier '{s}'"),
        Some(Tok::Nat(n)) => format!("literal {n}"),
        Some(Tok::Keyword(k)) => format!("'{k}'"),
        Some(Tok::Punct(p)) => format!("'{p}'"),
        Some(Tok::Annot(k, _)) => format!("annotation '{}'", k.keyword()),
    }
}

