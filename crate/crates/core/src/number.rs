//! Scalars shared by the exact and floating code paths.

use std::fmt;
use std::iter::Sum;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{Num, Signed, ToPrimitive, Zero};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Arithmetic the generic kernels need; implemented for exact rationals and `f64`.
pub trait Scalar: Num + Clone + PartialOrd + fmt::Debug + Send + Sync + 'static {
    const EXACT: bool;

    fn from_rational(r: &Rational) -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn to_rational(&self) -> Rational;
    fn into_number(self) -> Number;
    fn into_weights(v: Vec<Self>) -> Weights;

    fn from_usize(n: usize) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(n)))
    }

    fn pow(&self, e: usize) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn from_f64(x: f64) -> Self {
        Rational::from_float(x).unwrap_or_else(Rational::zero)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
    fn into_number(self) -> Number {
        Number::Exact(self)
    }
    fn into_weights(v: Vec<Self>) -> Weights {
        Weights::Exact(v)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_rational(&self) -> Rational {
        Rational::from_float(*self).unwrap_or_else(Rational::zero)
    }
    fn into_number(self) -> Number {
        Number::Float(self)
    }
    fn into_weights(v: Vec<Self>) -> Weights {
        Weights::Float(v)
    }
}

/// Zero of the element type of `v`, for use inside `with_weights!` bodies.
pub fn zero_of<T: Scalar>(_: &[T]) -> T {
    T::zero()
}

pub fn sum<T: Scalar>(it: impl IntoIterator<Item = T>) -> T {
    it.into_iter().fold(T::zero(), |a, b| a + b)
}

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

/// Parses `p/q`, an integer, or a decimal. Integers and fractions are exact.
pub fn parse_number(tok: &str) -> Result<Number> {
    let t = tok.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p = BigInt::from_str_radix(p.trim(), 10).map_err(|_| bad_number(t))?;
        let q = BigInt::from_str_radix(q.trim(), 10).map_err(|_| bad_number(t))?;
        if q.is_zero() {
            return Err(bad_number(t));
        }
        return Ok(Number::Exact(Rational::new(p, q)));
    }
    if let Ok(i) = BigInt::from_str_radix(t, 10) {
        return Ok(Number::Exact(Rational::from_integer(i)));
    }
    t.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .map(Number::Float)
        .ok_or_else(|| bad_number(t))
}

fn bad_number(t: &str) -> Error {
    Error::Parse {
        line: 0,
        msg: format!("not a number: {t:?}"),
    }
}

/// A scalar result tagged with how it was computed.
#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Exact(Rational),
    Float(f64),
}

impl Number {
    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(r) => Scalar::to_f64(r),
            Number::Float(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Number::Exact(r) => Some(r),
            Number::Float(_) => None,
        }
    }

    pub fn to_rational(&self) -> Rational {
        match self {
            Number::Exact(r) => r.clone(),
            Number::Float(x) => Scalar::to_rational(x),
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Number::Exact(r) => r.is_negative(),
            Number::Float(x) => *x < 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Exact(r) => r.is_zero(),
            Number::Float(x) => *x == 0.0,
        }
    }

    pub fn exactness(&self) -> Exactness {
        match self {
            Number::Exact(_) => Exactness::Rational,
            Number::Float(_) => Exactness::Float,
        }
    }
}

impl Number {
    /// Numeric comparison: exact when both sides are exact, through `f64` otherwise.
    pub fn cmp_value(&self, other: &Number) -> std::cmp::Ordering {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => a.cmp(b),
            _ => self.to_f64().total_cmp(&other.to_f64()),
        }
    }

    pub fn ge(&self, other: &Number) -> bool {
        self.cmp_value(other) != std::cmp::Ordering::Less
    }

    pub fn gt(&self, other: &Number) -> bool {
        self.cmp_value(other) == std::cmp::Ordering::Greater
    }

    pub fn pow(&self, e: usize) -> Number {
        match self {
            Number::Exact(r) => Number::Exact(Scalar::pow(r, e)),
            Number::Float(x) => Number::Float(x.powi(e as i32)),
        }
    }
}

macro_rules! number_op {
    ($trait:ident, $method:ident, $op:tt) => {
        impl std::ops::$trait<&Number> for &Number {
            type Output = Number;
            fn $method(self, rhs: &Number) -> Number {
                match (self, rhs) {
                    (Number::Exact(a), Number::Exact(b)) => Number::Exact(a $op b),
                    (a, b) => Number::Float(a.to_f64() $op b.to_f64()),
                }
            }
        }

        impl std::ops::$trait for Number {
            type Output = Number;
            fn $method(self, rhs: Number) -> Number {
                &self $op &rhs
            }
        }
    };
}

number_op!(Add, add, +);
number_op!(Sub, sub, -);
number_op!(Mul, mul, *);
number_op!(Div, div, /);

impl From<Rational> for Number {
    fn from(r: Rational) -> Self {
        Number::Exact(r)
    }
}

impl From<f64> for Number {
    fn from(x: f64) -> Self {
        Number::Float(x)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(r) => write!(f, "{r}"),
            Number::Float(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    Rational,
    Float,
    MonteCarlo,
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(2))?;
        match self {
            Number::Exact(r) => {
                m.serialize_entry("value", &r.to_string())?;
                m.serialize_entry("approx", &Scalar::to_f64(r))?;
            }
            Number::Float(x) => m.serialize_entry("value", x)?,
        }
        m.serialize_entry("exactness", &self.exactness())?;
        m.end()
    }
}

/// A dense vector of weights, exact or floating.
#[derive(Clone, Debug, PartialEq)]
pub enum Weights {
    Exact(Vec<Rational>),
    Float(Vec<f64>),
}

#[macro_export]
#[doc(hidden)]
macro_rules! with_weights {
    ($w:expr, $v:ident => $body:expr) => {
        match $w {
            $crate::number::Weights::Exact($v) => $body,
            $crate::number::Weights::Float($v) => $body,
        }
    };
}

impl Weights {
    pub fn len(&self) -> usize {
        with_weights!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Weights::Exact(_))
    }

    pub fn get(&self, i: usize) -> Number {
        match self {
            Weights::Exact(v) => Number::Exact(v[i].clone()),
            Weights::Float(v) => Number::Float(v[i]),
        }
    }

    pub fn get_f64(&self, i: usize) -> f64 {
        match self {
            Weights::Exact(v) => Scalar::to_f64(&v[i]),
            Weights::Float(v) => v[i],
        }
    }

    pub fn is_positive(&self, i: usize) -> bool {
        match self {
            Weights::Exact(v) => v[i].is_positive(),
            Weights::Float(v) => v[i] > 0.0,
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        with_weights!(self, v => v.iter().map(Scalar::to_f64).collect())
    }

    pub fn to_rational_vec(&self) -> Vec<Rational> {
        with_weights!(self, v => v.iter().map(Scalar::to_rational).collect())
    }

    pub fn numbers(&self) -> Vec<Number> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Builds exact weights when every entry is exact, floating otherwise.
    pub fn from_numbers(nums: Vec<Number>) -> Weights {
        if nums.iter().all(Number::is_exact) {
            Weights::Exact(nums.into_iter().map(|n| n.to_rational()).collect())
        } else {
            Weights::Float(nums.iter().map(Number::to_f64).collect())
        }
    }
}

impl Sum<Number> for Number {
    fn sum<I: Iterator<Item = Number>>(iter: I) -> Number {
        iter.fold(Number::Exact(Rational::zero()), |a, b| match (a, b) {
            (Number::Exact(x), Number::Exact(y)) => Number::Exact(x + y),
            (a, b) => Number::Float(a.to_f64() + b.to_f64()),
        })
    }
}
