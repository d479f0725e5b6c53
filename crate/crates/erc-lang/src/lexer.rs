//! Tokenizer. Comments starting `//@` are verification annotations and are
//! kept as tokens; ordinary `//` comments are skipped.

use crate::ast::{AnnotKind, Span};
use crate::SyntaxError;
use num_bigint::BigInt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Nat(BigInt),
    Keyword(&'static str),
    Punct(&'static str),
    Annot(AnnotKind, String),
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const KEYWORDS: &[&str] = &[
    "INTEGER", "REAL", "IF", "THEN", "ELSE", "WHILE", "DO", "RETURN", "iota", "choose",
];

pub fn lex(src: &str, file: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! here {
        () => {
            Span::new(line, col)
        };
    }

    while i < bytes.len() {
        let c = bytes[i] as char;
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && i + 1 < bytes.len() && bytes[i + 1] as char == '/' {
            let span = here!();
            let start = i;
            while i < bytes.len() && bytes[i] as char != '\n' {
                i += 1;
            }
            let text = &src[start..i];
            col += (i - start) as u32;
            if let Some(rest) = text.strip_prefix("//@") {
                let rest = rest.trim();
                let (kw, body) = rest.split_once(':').ok_or_else(|| SyntaxError {
                    file: file.to_string(),
                    span,
                    msg: "annotation needs the form //@ kind: text".to_string(),
                })?;
                let kind = match kw.trim() {
                    "pre" => AnnotKind::Pre,
                    "post" => AnnotKind::Post,
                    "invariant" => AnnotKind::Invariant,
                    "variant" => AnnotKind::Variant,
                    "epsilon" => AnnotKind::Epsilon,
                    other => {
                        return Err(SyntaxError {
                            file: file.to_string(),
                            span,
                            msg: format!("unknown annotation kind '{other}'"),
                        })
                    }
                };
                out.push(Token {
                    tok: Tok::Annot(kind, body.trim().to_string()),
                    span,
                });
            }
            continue;
        }
        if c.is_ascii_digit() {
            let span = here!();
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
            }
            let text = &src[start..i];
            col += (i - start) as u32;
            out.push(Token {
                tok: Tok::Nat(text.parse::<BigInt>().expect("digit run parses")),
                span,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let span = here!();
            let start = i;
            while i < bytes.len() && {
                let ch = bytes[i] as char;
                ch.is_ascii_alphanumeric() || ch == '_'
            } {
                i += 1;
            }
            let text = &src[start..i];
            col += (i - start) as u32;
            let tok = match KEYWORDS.iter().find(|k| **k == text) {
                Some(k) => Tok::Keyword(k),
                None => Tok::Ident(text.to_string()),
            };
            out.push(Token { tok, span });
            continue;
        }
        let span = here!();
        let two = if i + 1 < bytes.len() { &src[i..i + 2] } else { "" };
        let punct2 = [":="].iter().find(|p| **p == two);
        if let Some(p) = punct2 {
            out.push(Token { tok: Tok::Punct(p), span });
            i += 2;
            col += 2;
            continue;
        }
        let punct1 = ["{", "}", "(", ")", "[", "]", ",", ";", "+", "-", "*", "/", ">", "<", "=", "?", ":"]
            .iter()
            .find(|p| p.as_bytes()[0] as char == c);
        match punct1 {
            Some(p) => {
                out.push(Token { tok: Tok::Punct(p), span });
                i += 1;
                col += 1;
            }
            None => {
                return Err(SyntaxError {
                    file: file.to_string(),
                    span,
                    msg: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    Ok(out)
}
