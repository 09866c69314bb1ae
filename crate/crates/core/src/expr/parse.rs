//! Recursive-descent parser for the constraint grammar:
//!
//! ```text
//! conj  := cmp ("&&" cmp)*
//! cmp   := sum relop sum
//! relop := "<" | ">" | "<=" | ">=" | "==" | "!="
//! sum   := term (("+" | "-") term)*
//! term  := int | var | int "*" var | "-" term
//! ```
//!
//! A single `=` is also accepted as equality so canonical renderings parse
//! back.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use super::{LinearExpr, Term, VarName};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawRel {
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
}

impl RawRel {
    pub fn symbol(self) -> &'static str {
        match self {
            RawRel::Lt => "<",
            RawRel::Gt => ">",
            RawRel::Le => "<=",
            RawRel::Ge => ">=",
            RawRel::Eq => "==",
            RawRel::Ne => "!=",
        }
    }
}

/// A signed literal or `coeff*var` product as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTerm {
    pub coeff: BigInt,
    pub var: Option<VarName>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawSum {
    pub terms: Vec<RawTerm>,
}

impl RawSum {
    pub fn to_linear(&self) -> LinearExpr {
        let mut constant = BigInt::default();
        let mut terms = Vec::new();
        for t in &self.terms {
            match &t.var {
                Some(v) => terms.push(Term::new(t.coeff.clone(), v.clone())),
                None => constant += &t.coeff,
            }
        }
        LinearExpr::new(terms, constant)
    }

    pub fn vars(&self) -> impl Iterator<Item = &VarName> {
        self.terms.iter().filter_map(|t| t.var.as_ref())
    }
}

impl fmt::Display for RawSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let neg = t.coeff.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mag = t.coeff.abs();
            match &t.var {
                Some(v) if mag.is_one() => write!(f, "{v}")?,
                Some(v) => write!(f, "{mag}*{v}")?,
                None => write!(f, "{mag}")?,
            }
        }
        Ok(())
    }
}

/// One comparison exactly as written, before any normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawComparison {
    pub lhs: RawSum,
    pub rel: RawRel,
    pub rhs: RawSum,
}

impl RawComparison {
    pub fn vars(&self) -> impl Iterator<Item = &VarName> {
        self.lhs.vars().chain(self.rhs.vars())
    }
}

impl fmt::Display for RawComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.rel.symbol(), self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    And,
    Rel(RawRel),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let two = |b: u8| bytes.get(i + 1) == Some(&b);
        let tok = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let digits = &text[start..i];
                Tok::Int(digits.parse().expect("ascii digits"))
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                Tok::Ident(text[start..i].to_string())
            }
            b'+' => {
                i += 1;
                Tok::Plus
            }
            b'-' => {
                i += 1;
                Tok::Minus
            }
            b'*' => {
                i += 1;
                Tok::Star
            }
            b'&' if two(b'&') => {
                i += 2;
                Tok::And
            }
            b'<' | b'>' => {
                let eq = two(b'=');
                i += if eq { 2 } else { 1 };
                Tok::Rel(match (c, eq) {
                    (b'<', false) => RawRel::Lt,
                    (b'<', true) => RawRel::Le,
                    (_, false) => RawRel::Gt,
                    (_, true) => RawRel::Ge,
                })
            }
            b'=' => {
                i += if two(b'=') { 2 } else { 1 };
                Tok::Rel(RawRel::Eq)
            }
            b'!' if two(b'=') => {
                i += 2;
                Tok::Rel(RawRel::Ne)
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn conj(&mut self) -> Result<Vec<RawComparison>> {
        let mut out = vec![self.cmp()?];
        while self.peek() == Some(&Tok::And) {
            self.bump();
            out.push(self.cmp()?);
        }
        if self.peek().is_some() {
            return self.syntax("expected `&&` or end of input");
        }
        Ok(out)
    }

    fn cmp(&mut self) -> Result<RawComparison> {
        let lhs = self.sum()?;
        let rel = match self.peek() {
            Some(Tok::Rel(r)) => *r,
            _ => return self.syntax("expected a comparison operator"),
        };
        self.bump();
        let rhs = self.sum()?;
        Ok(RawComparison { lhs, rel, rhs })
    }

    fn sum(&mut self) -> Result<RawSum> {
        let mut terms = vec![self.term()?];
        loop {
            let negate = match self.peek() {
                Some(Tok::Plus) => false,
                Some(Tok::Minus) => true,
                _ => break,
            };
            self.bump();
            let mut t = self.term()?;
            if negate {
                t.coeff = -t.coeff;
            }
            terms.push(t);
        }
        Ok(RawSum { terms })
    }

    fn term(&mut self) -> Result<RawTerm> {
        match self.peek().cloned() {
            Some(Tok::Minus) => {
                self.bump();
                let mut t = self.term()?;
                t.coeff = -t.coeff;
                Ok(t)
            }
            Some(Tok::Int(n)) => {
                self.bump();
                if self.peek() != Some(&Tok::Star) {
                    return Ok(RawTerm {
                        coeff: n,
                        var: None,
                    });
                }
                self.bump();
                let var = match self.peek().cloned() {
                    Some(Tok::Ident(name)) => VarName::new(name)?,
                    _ => return self.syntax("expected a variable after `*`"),
                };
                self.bump();
                if self.peek() == Some(&Tok::Star) {
                    return Err(Error::NonLinear { pos: self.pos() });
                }
                Ok(RawTerm {
                    coeff: n,
                    var: Some(var),
                })
            }
            Some(Tok::Ident(name)) => {
                self.bump();
                if self.peek() == Some(&Tok::Star) {
                    return Err(Error::NonLinear { pos: self.pos() });
                }
                Ok(RawTerm {
                    coeff: BigInt::one(),
                    var: Some(VarName::new(name)?),
                })
            }
            _ => self.syntax("expected an integer, a variable or `-`"),
        }
    }
}

/// Parses a conjunction of comparisons without normalizing anything.
pub fn parse(text: &str) -> Result<Vec<RawComparison>> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
    };
    p.conj()
}
