//! Recursive-descent parser for the expression language.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := atom ('^' unary)?          right associative
//! atom    := number | 'pi' | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Exponents must reduce to a constant after folding.

use super::{Expr, Func};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at byte {offset}: {message} (found `{token}`)")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
    pub token: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Tok, String)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (start, tok) = lx.next()?;
            let text = src[start..lx.pos].to_string();
            let end = tok == Tok::End;
            out.push((start, tok, text));
            if end {
                return Ok(out);
            }
        }
    }

    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && (bytes[self.pos] as char).is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= bytes.len() {
            return Ok((start, Tok::End));
        }
        let c = bytes[self.pos] as char;
        if c.is_ascii_digit() || c == '.' {
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
                self.pos += 1;
            }
            // optional exponent: 1e-3, 2.5E+4
            if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                let save = self.pos;
                self.pos += 1;
                if self.pos < bytes.len() && (bytes[self.pos] == b'+' || bytes[self.pos] == b'-') {
                    self.pos += 1;
                }
                if self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                    while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                } else {
                    self.pos = save;
                }
            }
            let text = &self.src[start..self.pos];
            return text
                .parse::<f64>()
                .map(|v| (start, Tok::Num(v)))
                .map_err(|_| ParseError {
                    offset: start,
                    message: "malformed number".into(),
                    token: text.into(),
                });
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while self.pos < bytes.len()
                && ((bytes[self.pos] as char).is_ascii_alphanumeric() || bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            return Ok((start, Tok::Ident(self.src[start..self.pos].to_string())));
        }
        self.pos += c.len_utf8().max(1);
        match c {
            '+' | '-' | '*' | '/' | '^' => Ok((start, Tok::Op(c))),
            '(' => Ok((start, Tok::LParen)),
            ')' => Ok((start, Tok::RParen)),
            _ => {
                // step over the whole UTF-8 character for the error token
                let ch = self.src[start..].chars().next().unwrap_or(c);
                Err(ParseError {
                    offset: start,
                    message: "unexpected character".into(),
                    token: ch.to_string(),
                })
            }
        }
    }
}

struct Parser<'v> {
    toks: Vec<(usize, Tok, String)>,
    i: usize,
    vars: &'v [&'v str],
    constants: &'v [(&'v str, f64)],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].1
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (offset, _, text) = &self.toks[self.i];
        ParseError {
            offset: *offset,
            message: message.into(),
            token: if text.is_empty() { "<end>".into() } else { text.clone() },
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.i += 1;
                    lhs = lhs.add(&self.term()?);
                }
                Tok::Op('-') => {
                    self.i += 1;
                    lhs = lhs.sub(&self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.i += 1;
                    lhs = lhs.mul(&self.unary()?);
                }
                Tok::Op('/') => {
                    self.i += 1;
                    lhs = lhs.div(&self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.i += 1;
                Ok(self.unary()?.neg())
            }
            Tok::Op('+') => {
                self.i += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Tok::Op('^') = self.peek() {
            self.i += 1;
            let at = self.i;
            let exponent = self.unary()?;
            return match exponent.as_const() {
                Some(p) => Ok(base.powf(p)),
                None => {
                    self.i = at;
                    Err(self.error("exponent must be a constant"))
                }
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.i += 1;
                Ok(Expr::constant(v))
            }
            Tok::LParen => {
                self.i += 1;
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Tok::LParen = self.toks[self.i + 1].1 {
                    let Some(f) = Func::from_name(&name) else {
                        return Err(self.error(format!("unknown function `{name}`")));
                    };
                    self.i += 2;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::call(f, &arg));
                }
                if self.vars.contains(&name.as_str()) {
                    self.i += 1;
                    return Ok(Expr::var(&name));
                }
                if let Some((_, v)) = self.constants.iter().find(|(n, _)| *n == name) {
                    self.i += 1;
                    return Ok(Expr::constant(*v));
                }
                if name == "pi" {
                    self.i += 1;
                    return Ok(Expr::constant(std::f64::consts::PI));
                }
                if Func::from_name(&name).is_some() {
                    return Err(self.error(format!("function `{name}` needs an argument")));
                }
                Err(self.error(format!("undeclared variable `{name}`")))
            }
            Tok::End => Err(self.error("unexpected end of input")),
            _ => Err(self.error("unexpected token")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if let Tok::RParen = self.peek() {
            self.i += 1;
            Ok(())
        } else {
            Err(self.error("expected `)`"))
        }
    }
}

/// Parses `source`, accepting only the identifiers in `allowed_vars` as variables.
pub fn parse(source: &str, allowed_vars: &[&str]) -> Result<Expr, ParseError> {
    parse_with_constants(source, allowed_vars, &[])
}

/// Like [`parse`], but named constants are folded in as literals.
pub fn parse_with_constants(
    source: &str,
    allowed_vars: &[&str],
    constants: &[(&str, f64)],
) -> Result<Expr, ParseError> {
    let toks = Lexer::tokens(source)?;
    if toks.len() == 1 {
        return Err(ParseError {
            offset: 0,
            message: "empty expression".into(),
            token: "<end>".into(),
        });
    }
    let mut p = Parser {
        toks,
        i: 0,
        vars: allowed_vars,
        constants,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}
