//! Number types used for probabilities, answers and outputs.
//!
//! Everything in the crate is generic over [`Scalar`]. [`Rational`] gives
//! exact arithmetic for finite problems, `f64` is the float mode used for
//! continuous problems and compares with an absolute tolerance of `1e-9`.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Comparison tolerance in float mode.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// Exact rational number.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// `true` when arithmetic is exact.
    const EXACT: bool;
    /// Short label used in reports (`"rational"` or `"float"`).
    const MODE: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(value: i64) -> Self;
    /// `num / den`; `den` must be nonzero.
    fn ratio(num: i64, den: i64) -> Self;
    /// Exact for rationals (every finite double is a dyadic rational).
    fn from_f64(value: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;
    /// Exact equality for rationals, `|a - b| <= 1e-9` for floats.
    fn approx_eq(&self, other: &Self) -> bool;
    fn floor_to_i64(&self) -> i64;

    fn from_usize(value: usize) -> Self {
        Self::from_int(value as i64)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    /// `a <= b` up to the mode's tolerance.
    fn le_tol(&self, other: &Self) -> bool {
        self <= other || self.approx_eq(other)
    }

    /// Parses `"3"`, `"-1/3"` or `"0.25"`.
    fn parse_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad numerator in `{s}`")))?;
            let d: i64 = d
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator in `{s}`")))?;
            if d == 0 {
                return Err(Error::Parse(format!("zero denominator in `{s}`")));
            }
            return Ok(Self::ratio(n, d));
        }
        if let Ok(i) = s.parse::<i64>() {
            return Ok(Self::from_int(i));
        }
        let x: f64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("not a number: `{s}`")))?;
        if !x.is_finite() {
            return Err(Error::Parse(format!("not finite: `{s}`")));
        }
        Ok(Self::from_f64(x))
    }

    /// Reads a JSON number or a string such as `"1/3"`.
    fn from_json(value: &serde_json::Value) -> Result<Self> {
        match value {
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Self::from_int(i))
                } else {
                    n.as_f64()
                        .map(Self::from_f64)
                        .ok_or_else(|| Error::Parse(format!("bad number {n}")))
                }
            }
            serde_json::Value::String(s) => Self::parse_str(s),
            other => Err(Error::Parse(format!("expected a number, got {other}"))),
        }
    }

    /// Rationals serialize as strings so no precision is lost.
    fn to_json(&self) -> serde_json::Value;
}

impl Scalar for Rational {
    const EXACT: bool = true;
    const MODE: &'static str = "rational";

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_int(value: i64) -> Self {
        BigRational::from_integer(BigInt::from(value))
    }
    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_f64(value: f64) -> Self {
        BigRational::from_float(value).unwrap_or_else(Zero::zero)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }
    fn floor_to_i64(&self) -> i64 {
        self.floor().to_integer().to_i64().unwrap_or(i64::MAX)
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const MODE: &'static str = "float";

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(value: i64) -> Self {
        value as f64
    }
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_f64(value: f64) -> Self {
        value
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn approx_eq(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_TOLERANCE
    }
    fn floor_to_i64(&self) -> i64 {
        self.floor() as i64
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(Rational::parse_str("-1/3").unwrap(), Rational::ratio(-1, 3));
        assert_eq!(Rational::parse_str("7").unwrap(), Rational::from_int(7));
        assert_eq!(Rational::parse_str("0.25").unwrap(), Rational::ratio(1, 4));
        assert!(Rational::parse_str("1/0").is_err());
        assert!(f64::parse_str("abc").is_err());
        assert_eq!(f64::parse_str("1/4").unwrap(), 0.25);
    }

    #[test]
    fn json_round_trip_keeps_exact_values() {
        let x = Rational::ratio(5, 24);
        assert_eq!(Rational::from_json(&x.to_json()).unwrap(), x);
        assert_eq!(f64::from_json(&serde_json::json!(0.5)).unwrap(), 0.5);
    }

    #[test]
    fn float_comparison_uses_tolerance() {
        assert!(1.0f64.approx_eq(&(1.0 + 1e-10)));
        assert!(!1.0f64.approx_eq(&(1.0 + 1e-6)));
        assert!(!Rational::ratio(1, 3).approx_eq(&Rational::from_f64(1.0 / 3.0)));
    }
}
