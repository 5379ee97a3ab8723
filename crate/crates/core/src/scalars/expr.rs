//! Arithmetic expressions over named parameters and exact literals.
//!
//! Shared by the rational-function parser and the scenario DSL. Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' integer)?
//! atom   := number | ident | '(' expr ')'
//! ```

use num_bigint::BigInt;
use num_traits::{One, Pow};

use super::{Mode, RatFunc, Rational, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Rational),
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

/// A parse failure at a byte offset into the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprError {
    pub offset: usize,
    pub reason: String,
}

impl Expr {
    /// Parameter names in order of first appearance.
    pub fn params(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Num(_) => {}
            Expr::Param(p) => {
                if !out.contains(&p.as_str()) {
                    out.push(p);
                }
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.collect_params(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
        }
    }

    /// Evaluates in `mode`, resolving parameters through `lookup`.
    pub fn eval(&self, mode: Mode, lookup: &dyn Fn(&str) -> Option<Scalar>) -> Result<Scalar> {
        Ok(match self {
            Expr::Num(r) => Scalar::from_rational(r.clone(), mode),
            Expr::Param(p) => {
                let v = lookup(p).ok_or_else(|| Error::ScalarParse {
                    text: p.clone(),
                    reason: "unknown parameter".into(),
                })?;
                if v.mode() != mode {
                    return Err(Error::ModeMismatch(v.mode().name(), mode.name()));
                }
                v
            }
            Expr::Neg(a) => a.eval(mode, lookup)?.neg(),
            Expr::Add(a, b) => a.eval(mode, lookup)?.add(&b.eval(mode, lookup)?)?,
            Expr::Sub(a, b) => a.eval(mode, lookup)?.sub(&b.eval(mode, lookup)?)?,
            Expr::Mul(a, b) => a.eval(mode, lookup)?.mul(&b.eval(mode, lookup)?)?,
            Expr::Div(a, b) => a.eval(mode, lookup)?.div(&b.eval(mode, lookup)?)?,
            Expr::Pow(a, n) => {
                let base = a.eval(mode, lookup)?;
                let mut acc = Scalar::one(mode);
                for _ in 0..*n {
                    acc = acc.mul(&base)?;
                }
                acc
            }
        })
    }

    pub fn to_ratfunc(&self, lookup: &dyn Fn(&str) -> Option<RatFunc>) -> Result<RatFunc> {
        let value = self.eval(Mode::Symbolic, &|name| lookup(name).map(Scalar::Sym))?;
        match value {
            Scalar::Sym(f) => Ok(f),
            _ => unreachable!("symbolic evaluation yields a rational function"),
        }
    }
}

/// Parses the whole of `text` as one expression.
pub fn parse_complete(text: &str) -> Result<Expr> {
    let fail = |e: ExprError| Error::ScalarParse {
        text: text.to_string(),
        reason: format!("{} at offset {}", e.reason, e.offset),
    };
    let (expr, used) = parse_prefix(text).map_err(fail)?;
    let rest = &text[used..];
    if !rest.trim().is_empty() {
        return Err(fail(ExprError {
            offset: used + (rest.len() - rest.trim_start().len()),
            reason: format!("unexpected `{}`", rest.trim_start().chars().next().unwrap()),
        }));
    }
    Ok(expr)
}

/// Parses the longest expression at the start of `text`; returns it with the
/// number of bytes consumed. Stops (without error) at any character that
/// cannot continue the expression, e.g. `;` or `}`.
pub fn parse_prefix(text: &str) -> std::result::Result<(Expr, usize), ExprError> {
    let mut p = Parser { src: text, pos: 0 };
    let e = p.expr()?;
    Ok((e, p.pos))
}

/// Parses a rational literal: an integer, a decimal with optional exponent
/// (`0.1`, `1e-3`) or a fraction `a/b`, with an optional leading sign.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let fail = |reason: &str| Error::ScalarParse {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    let t = text.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let value = match body.split_once('/') {
        Some((n, d)) => {
            let n = decimal(n).ok_or_else(|| fail("bad numerator"))?;
            let d = decimal(d).ok_or_else(|| fail("bad denominator"))?;
            if d == Rational::from_integer(0.into()) {
                return Err(Error::DivisionByZero);
            }
            n / d
        }
        None => decimal(body).ok_or_else(|| fail("not a number"))?,
    };
    Ok(if neg { -value } else { value })
}

/// Unsigned decimal literal with optional fraction and exponent.
fn decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let scale = exp - frac.len() as i32;
    let ten = Rational::from_integer(10.into());
    let factor = if scale >= 0 {
        Pow::pow(&ten, scale as u32)
    } else {
        Pow::pow(&ten, (-scale) as u32).recip()
    };
    Some(Rational::from_integer(digits) * factor)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start_matches([' ', '\t']);
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn error<T>(&self, reason: impl Into<String>) -> std::result::Result<T, ExprError> {
        Err(ExprError {
            offset: self.pos,
            reason: reason.into(),
        })
    }

    fn expr(&mut self) -> std::result::Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some('-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> std::result::Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some('/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> std::result::Result<Expr, ExprError> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        let digits: String = self.rest().chars().take_while(char::is_ascii_digit).collect();
        if digits.is_empty() {
            return self.error("expected an integer exponent");
        }
        let n: u32 = match digits.parse() {
            Ok(n) if n <= super::poly::MAX_DEGREE => n,
            _ => return self.error("exponent too large"),
        };
        self.pos += digits.len();
        Ok(Expr::Pow(Box::new(base), n))
    }

    fn atom(&mut self) -> std::result::Result<Expr, ExprError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return self.error("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() || c == '_' => {
                let name: String = self
                    .rest()
                    .chars()
                    .take_while(|c| c.is_alphanumeric() || *c == '_')
                    .collect();
                self.pos += name.len();
                Ok(Expr::Param(name))
            }
            Some(c) => self.error(format!("unexpected `{c}`")),
            None => self.error("unexpected end of expression"),
        }
    }

    fn number(&mut self) -> std::result::Result<Expr, ExprError> {
        let bytes = self.rest().as_bytes();
        let mut i = 0;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        // An `e` directly followed by digits is an exponent: `2e1` is twenty.
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let literal = &self.rest()[..i];
        match decimal(literal) {
            Some(r) => {
                self.pos += i;
                Ok(Expr::Num(r))
            }
            None => self.error(format!("bad number `{literal}`")),
        }
    }
}

impl Expr {
    pub fn one() -> Expr {
        Expr::Num(Rational::one())
    }
}
