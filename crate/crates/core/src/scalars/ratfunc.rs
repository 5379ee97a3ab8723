use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use super::poly::{BiPoly, Monomial, Var};
use super::{expr, Rational};
use crate::error::{Error, Result};

/// A quotient of two [`BiPoly`]s.
///
/// Values are not reduced to lowest terms; two rational functions are equal
/// when their cross products agree. Construction still strips a common
/// monomial factor, folds constant denominators into the numerator and
/// collapses `k·d / d` to `k`, which keeps the results of the belief
/// computations readable.
#[derive(Debug, Clone)]
pub struct RatFunc {
    num: BiPoly,
    den: BiPoly,
}

impl RatFunc {
    pub fn new(num: BiPoly, den: BiPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalized(num, den))
    }

    fn normalized(mut num: BiPoly, mut den: BiPoly) -> Self {
        if num.is_zero() {
            return RatFunc::from_poly(BiPoly::zero());
        }
        if let Some(k) = num.ratio_to(&den) {
            return RatFunc::constant(k);
        }
        let common = {
            let a = num.monomial_content();
            let b = den.monomial_content();
            Monomial::new(a.e1.min(b.e1), a.e2.min(b.e2))
        };
        if common != Monomial::ONE {
            num = num.div_monomial(common);
            den = den.div_monomial(common);
        }
        if let Some(c) = den.as_constant() {
            let inv = c.recip();
            return RatFunc::from_poly(num.scale(&inv));
        }
        if den.leading().is_some_and(|(_, c)| c.is_negative()) {
            num = num.neg();
            den = den.neg();
        }
        RatFunc { num, den }
    }

    pub fn from_poly(p: BiPoly) -> Self {
        RatFunc {
            num: p,
            den: BiPoly::one(),
        }
    }

    pub fn constant(c: Rational) -> Self {
        RatFunc::from_poly(BiPoly::constant(c))
    }

    pub fn zero() -> Self {
        RatFunc::from_poly(BiPoly::zero())
    }

    pub fn one() -> Self {
        RatFunc::constant(Rational::one())
    }

    pub fn e1() -> Self {
        RatFunc::from_poly(BiPoly::e1())
    }

    pub fn e2() -> Self {
        RatFunc::from_poly(BiPoly::e2())
    }

    pub fn numerator(&self) -> &BiPoly {
        &self.num
    }

    pub fn denominator(&self) -> &BiPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The value as a rational constant, if it does not depend on ε₁, ε₂.
    pub fn as_constant(&self) -> Option<Rational> {
        let n = self.num.as_constant()?;
        let d = self.den.as_constant()?;
        Some(n / d)
    }

    pub fn add(&self, other: &RatFunc) -> Result<RatFunc> {
        if self.den == other.den {
            return Ok(Self::normalized(self.num.add(&other.num), self.den.clone()));
        }
        let num = self.num.mul(&other.den)?.add(&other.num.mul(&self.den)?);
        Ok(Self::normalized(num, self.den.mul(&other.den)?))
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &RatFunc) -> Result<RatFunc> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RatFunc) -> Result<RatFunc> {
        // Cancel a shared factor before multiplying out.
        if self.den == other.num {
            return Ok(Self::normalized(self.num.clone(), other.den.clone()));
        }
        if self.num == other.den {
            return Ok(Self::normalized(other.num.clone(), self.den.clone()));
        }
        Ok(Self::normalized(
            self.num.mul(&other.num)?,
            self.den.mul(&other.den)?,
        ))
    }

    pub fn recip(&self) -> Result<RatFunc> {
        if self.num.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalized(self.den.clone(), self.num.clone()))
    }

    pub fn div(&self, other: &RatFunc) -> Result<RatFunc> {
        self.mul(&other.recip()?)
    }

    pub fn pow(&self, n: u32) -> Result<RatFunc> {
        Ok(Self::normalized(self.num.pow(n)?, self.den.pow(n)?))
    }

    /// Cross-multiplication equality: `a.num * b.den == b.num * a.den`.
    pub fn equals(&self, other: &RatFunc) -> Result<bool> {
        Ok(self.num.mul(&other.den)? == other.num.mul(&self.den)?)
    }

    pub fn eval(&self, e1: &Rational, e2: &Rational) -> Result<Rational> {
        let d = self.den.eval(e1, e2);
        if d.is_zero() {
            return Err(Error::VanishingDenominator(e1.to_string(), e2.to_string()));
        }
        Ok(self.num.eval(e1, e2) / d)
    }

    pub fn eval_f64(&self, e1: f64, e2: f64) -> f64 {
        self.num.eval_f64(e1, e2) / self.den.eval_f64(e1, e2)
    }

    /// Fixes one variable to a rational value.
    pub fn substitute(&self, v: Var, value: &Rational) -> Result<RatFunc> {
        RatFunc::new(self.num.substitute(v, value), self.den.substitute(v, value))
    }

    /// Adds `delta` to one coefficient of the numerator (`in_denominator =
    /// false`) or denominator, leaving everything else untouched.
    pub fn perturb(&self, in_denominator: bool, m: Monomial, delta: &Rational) -> RatFunc {
        if in_denominator {
            RatFunc {
                num: self.num.clone(),
                den: self.den.perturb(m, delta),
            }
        } else {
            RatFunc {
                num: self.num.perturb(m, delta),
                den: self.den.clone(),
            }
        }
    }

    fn is_atom(p: &BiPoly) -> bool {
        match p.terms().as_slice() {
            [(m, c)] => c.is_one() || (*m == Monomial::ONE && c.is_integer() && !c.is_negative()),
            _ => false,
        }
    }

    /// A denominator printed without parentheses must be a single factor.
    fn is_factor(p: &BiPoly) -> bool {
        Self::is_atom(p) && p.terms().iter().all(|(m, _)| m.e1 == 0 || m.e2 == 0)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        if Self::is_atom(&self.num) {
            write!(f, "{}", self.num)?;
        } else {
            write!(f, "({})", self.num)?;
        }
        if Self::is_factor(&self.den) {
            write!(f, "/{}", self.den)
        } else {
            write!(f, "/({})", self.den)
        }
    }
}

impl FromStr for RatFunc {
    type Err = Error;

    /// Parses expressions over `e1`, `e2` and rational literals with
    /// `+ - * / ^` and parentheses, e.g. `(e1 - e1*e2)/(e1 + e2 - e1*e2)`.
    fn from_str(s: &str) -> Result<Self> {
        let parsed = expr::parse_complete(s)?;
        parsed.to_ratfunc(&|name| match name {
            "e1" => Some(RatFunc::e1()),
            "e2" => Some(RatFunc::e2()),
            _ => None,
        })
    }
}
