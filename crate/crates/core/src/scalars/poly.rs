use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Rational;
use crate::error::{Error, Result};

/// Largest exponent allowed on either variable.
pub const MAX_DEGREE: u32 = 64;

/// The monomial `e1^a * e2^b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub e1: u32,
    pub e2: u32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { e1: 0, e2: 0 };

    pub fn new(e1: u32, e2: u32) -> Self {
        Monomial { e1, e2 }
    }

    pub fn degree(self) -> u32 {
        self.e1 + self.e2
    }

    /// Sort key of the canonical rendering order: total degree ascending,
    /// then `e1`-degree descending.
    fn render_key(self) -> (u32, std::cmp::Reverse<u32>) {
        (self.degree(), std::cmp::Reverse(self.e1))
    }

    fn checked_mul(self, other: Monomial) -> Result<Monomial> {
        let e1 = self.e1 + other.e1;
        let e2 = self.e2 + other.e2;
        if e1 > MAX_DEGREE || e2 > MAX_DEGREE {
            return Err(Error::DegreeOverflow(MAX_DEGREE));
        }
        Ok(Monomial { e1, e2 })
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (name, exp) in [("e1", self.e1), ("e2", self.e2)] {
            match exp {
                0 => {}
                1 => parts.push(name.to_string()),
                n => parts.push(format!("{name}^{n}")),
            }
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    E1,
    E2,
}

/// A polynomial in ε₁, ε₂ with exact rational coefficients. Zero
/// coefficients are never stored, so structural equality is polynomial
/// equality.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BiPoly {
    terms: BTreeMap<Monomial, Rational>,
}

impl BiPoly {
    pub fn zero() -> Self {
        BiPoly::default()
    }

    pub fn one() -> Self {
        BiPoly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        BiPoly::term(c, Monomial::ONE)
    }

    pub fn term(c: Rational, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        BiPoly { terms }
    }

    pub fn var(v: Var) -> Self {
        let m = match v {
            Var::E1 => Monomial::new(1, 0),
            Var::E2 => Monomial::new(0, 1),
        };
        BiPoly::term(Rational::one(), m)
    }

    pub fn e1() -> Self {
        BiPoly::var(Var::E1)
    }

    pub fn e2() -> Self {
        BiPoly::var(Var::E2)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// The constant value, if the polynomial has no variable terms.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::ONE).cloned(),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: Monomial) -> Rational {
        self.terms.get(&m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Terms in canonical rendering order.
    pub fn terms(&self) -> Vec<(Monomial, &Rational)> {
        let mut out: Vec<_> = self.terms.iter().map(|(m, c)| (*m, c)).collect();
        out.sort_by_key(|(m, _)| m.render_key());
        out
    }

    /// First term in canonical order, used to fix the sign of denominators.
    pub fn leading(&self) -> Option<(Monomial, &Rational)> {
        self.terms
            .iter()
            .min_by_key(|(m, _)| m.render_key())
            .map(|(m, c)| (*m, c))
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms
            .keys()
            .map(|m| match v {
                Var::E1 => m.e1,
                Var::E2 => m.e2,
            })
            .max()
            .unwrap_or(0)
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, -c.clone());
        }
        out
    }

    pub fn neg(&self) -> BiPoly {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, k: &Rational) -> BiPoly {
        if k.is_zero() {
            return BiPoly::zero();
        }
        BiPoly {
            terms: self.terms.iter().map(|(m, c)| (*m, c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &BiPoly) -> Result<BiPoly> {
        let mut out = BiPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.checked_mul(*mb)?, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> Result<BiPoly> {
        let mut out = BiPoly::one();
        for _ in 0..n {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// The largest monomial dividing every term (`1` for the zero polynomial).
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Monomial::ONE;
        };
        it.fold(*first, |acc, m| Monomial::new(acc.e1.min(m.e1), acc.e2.min(m.e2)))
    }

    /// Divides every term by `m`. The caller guarantees `m` divides each term.
    pub fn div_monomial(&self, m: Monomial) -> BiPoly {
        BiPoly {
            terms: self
                .terms
                .iter()
                .map(|(t, c)| (Monomial::new(t.e1 - m.e1, t.e2 - m.e2), c.clone()))
                .collect(),
        }
    }

    /// `Some(k)` when `self = k * other` for a rational constant `k`.
    pub fn ratio_to(&self, other: &BiPoly) -> Option<Rational> {
        if other.is_zero() || self.terms.len() != other.terms.len() {
            return None;
        }
        let mut k: Option<Rational> = None;
        for ((ma, ca), (mb, cb)) in self.terms.iter().zip(&other.terms) {
            if ma != mb {
                return None;
            }
            let r = ca / cb;
            match &k {
                None => k = Some(r),
                Some(prev) if *prev != r => return None,
                Some(_) => {}
            }
        }
        k
    }

    pub fn eval(&self, e1: &Rational, e2: &Rational) -> Rational {
        self.terms.iter().fold(Rational::zero(), |acc, (m, c)| {
            acc + c * num_traits::pow(e1.clone(), m.e1 as usize) * num_traits::pow(e2.clone(), m.e2 as usize)
        })
    }

    pub fn eval_f64(&self, e1: f64, e2: f64) -> f64 {
        self.terms.iter().fold(0.0, |acc, (m, c)| {
            acc + c.to_f64().unwrap_or(f64::NAN) * e1.powi(m.e1 as i32) * e2.powi(m.e2 as i32)
        })
    }

    /// Replaces one variable by a rational value.
    pub fn substitute(&self, v: Var, value: &Rational) -> BiPoly {
        let mut out = BiPoly::zero();
        for (m, c) in &self.terms {
            let (exp, rest) = match v {
                Var::E1 => (m.e1, Monomial::new(0, m.e2)),
                Var::E2 => (m.e2, Monomial::new(m.e1, 0)),
            };
            out.add_term(rest, c * num_traits::pow(value.clone(), exp as usize));
        }
        out
    }

    /// Adds `delta` to the coefficient of `m`.
    pub fn perturb(&self, m: Monomial, delta: &Rational) -> BiPoly {
        let mut out = self.clone();
        out.add_term(m, delta.clone());
        out
    }

    pub fn monomials(&self) -> Vec<Monomial> {
        self.terms().into_iter().map(|(m, _)| m).collect()
    }
}

impl fmt::Display for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms().into_iter().enumerate() {
            let magnitude = c.abs();
            let body = if m == Monomial::ONE {
                magnitude.to_string()
            } else if magnitude.is_one() {
                m.to_string()
            } else {
                format!("{magnitude}*{m}")
            };
            match (i, c.is_negative()) {
                (0, true) => write!(f, "-{body}")?,
                (0, false) => write!(f, "{body}")?,
                (_, true) => write!(f, " - {body}")?,
                (_, false) => write!(f, " + {body}")?,
            }
        }
        Ok(())
    }
}
