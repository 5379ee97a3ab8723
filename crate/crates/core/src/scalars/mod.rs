//! Exact and floating scalar arithmetic.
//!
//! Three modes never mix: [`Mode::Rational`] (arbitrary precision, exact),
//! [`Mode::Float`] (IEEE doubles, for sweeps) and [`Mode::Symbolic`]
//! (rational functions of the rule slacks ε₁, ε₂).

pub mod expr;
pub mod poly;
pub mod ratfunc;

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use expr::{parse_rational, Expr};
pub use poly::{BiPoly, Monomial, Var};
pub use ratfunc::RatFunc;

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// The grid on which symbolic masses are checked to lie in `[0, 1]`.
pub fn validation_grid() -> Vec<(Rational, Rational)> {
    let pts = [rat(1, 1000), rat(1, 100), rat(1, 10)];
    pts.iter()
        .flat_map(|a| pts.iter().map(move |b| (a.clone(), b.clone())))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Float,
    Symbolic,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Rational => "rational",
            Mode::Float => "float",
            Mode::Symbolic => "symbolic",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rational" => Ok(Mode::Rational),
            "float" => Ok(Mode::Float),
            "symbolic" => Ok(Mode::Symbolic),
            other => Err(format!("unknown mode `{other}` (rational|float|symbolic)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub enum Scalar {
    Rational(Rational),
    Float(f64),
    Sym(RatFunc),
}

impl Scalar {
    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Rational(_) => Mode::Rational,
            Scalar::Float(_) => Mode::Float,
            Scalar::Sym(_) => Mode::Symbolic,
        }
    }

    pub fn from_rational(r: Rational, mode: Mode) -> Scalar {
        match mode {
            Mode::Rational => Scalar::Rational(r),
            Mode::Float => Scalar::Float(r.to_f64().unwrap_or(f64::NAN)),
            Mode::Symbolic => Scalar::Sym(RatFunc::constant(r)),
        }
    }

    pub fn zero(mode: Mode) -> Scalar {
        Scalar::from_rational(Rational::zero(), mode)
    }

    pub fn one(mode: Mode) -> Scalar {
        Scalar::from_rational(Rational::one(), mode)
    }

    pub fn e1() -> Scalar {
        Scalar::Sym(RatFunc::e1())
    }

    pub fn e2() -> Scalar {
        Scalar::Sym(RatFunc::e2())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Float(x) => *x == 0.0,
            Scalar::Sym(f) => f.is_zero(),
        }
    }

    fn mismatch(&self, other: &Scalar) -> Error {
        Error::ModeMismatch(self.mode().name(), other.mode().name())
    }

    pub fn add(&self, other: &Scalar) -> Result<Scalar> {
        Ok(match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a + b),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a + b),
            (Scalar::Sym(a), Scalar::Sym(b)) => Scalar::Sym(a.add(b)?),
            _ => return Err(self.mismatch(other)),
        })
    }

    pub fn sub(&self, other: &Scalar) -> Result<Scalar> {
        Ok(match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a - b),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a - b),
            (Scalar::Sym(a), Scalar::Sym(b)) => Scalar::Sym(a.sub(b)?),
            _ => return Err(self.mismatch(other)),
        })
    }

    pub fn mul(&self, other: &Scalar) -> Result<Scalar> {
        Ok(match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a * b),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a * b),
            (Scalar::Sym(a), Scalar::Sym(b)) => Scalar::Sym(a.mul(b)?),
            _ => return Err(self.mismatch(other)),
        })
    }

    pub fn div(&self, other: &Scalar) -> Result<Scalar> {
        if other.mode() == self.mode() && other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a / b),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a / b),
            (Scalar::Sym(a), Scalar::Sym(b)) => Scalar::Sym(a.div(b)?),
            _ => return Err(self.mismatch(other)),
        })
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Rational(a) => Scalar::Rational(-a),
            Scalar::Float(a) => Scalar::Float(-a),
            Scalar::Sym(a) => Scalar::Sym(a.neg()),
        }
    }

    /// `1 - self`.
    pub fn complement(&self) -> Scalar {
        Scalar::one(self.mode())
            .sub(self)
            .expect("same-mode subtraction cannot fail")
    }

    /// Ordering of numeric scalars. Symbolic scalars are not ordered.
    pub fn compare(&self, other: &Scalar) -> Result<Ordering> {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Ok(a.cmp(b)),
            (Scalar::Float(a), Scalar::Float(b)) => a.partial_cmp(b).ok_or(Error::NotComparable),
            (Scalar::Sym(_), Scalar::Sym(_)) => Err(Error::NotComparable),
            _ => Err(self.mismatch(other)),
        }
    }

    /// Exact equality: rationals by value, floats bitwise-by-value, rational
    /// functions by cross-multiplication.
    pub fn equals(&self, other: &Scalar) -> Result<bool> {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Ok(a == b),
            (Scalar::Float(a), Scalar::Float(b)) => Ok(a == b),
            (Scalar::Sym(a), Scalar::Sym(b)) => a.equals(b),
            _ => Err(self.mismatch(other)),
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Scalar::Rational(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_ratfunc(&self) -> Option<&RatFunc> {
        match self {
            Scalar::Sym(f) => Some(f),
            _ => None,
        }
    }

    /// Numeric value as a double; `None` for non-constant symbolic values.
    pub fn to_f64(&self) -> Option<f64> {
        match self {
            Scalar::Rational(r) => r.to_f64(),
            Scalar::Float(x) => Some(*x),
            Scalar::Sym(f) => f.as_constant().and_then(|c| c.to_f64()),
        }
    }

    /// Checks `0 <= self <= 1`; symbolic values are checked on the
    /// validation grid.
    pub fn in_unit_interval(&self) -> bool {
        let unit = |r: &Rational| !r.is_negative() && *r <= Rational::one();
        match self {
            Scalar::Rational(r) => unit(r),
            Scalar::Float(x) => (0.0..=1.0).contains(x),
            Scalar::Sym(f) => validation_grid()
                .iter()
                .all(|(a, b)| f.eval(a, b).map(|v| unit(&v)).unwrap_or(false)),
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.equals(other).unwrap_or(false)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => write!(f, "{r}"),
            Scalar::Float(x) => f.write_str(&format_f64(*x)),
            Scalar::Sym(r) => write!(f, "{r}"),
        }
    }
}

/// Seventeen significant digits, plain decimal notation where that stays
/// readable.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-20..=16).contains(&magnitude) {
        let decimals = (16 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.16e}")
    }
}
