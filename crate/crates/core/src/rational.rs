//! Exact rational scalars and their text form.
//!
//! Every probability in the exact pipeline is a [`Rational`]. On the wire a
//! rational is the string `"num/den"` (or a bare integer `"num"`), always in
//! lowest terms with a positive denominator when produced by this crate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid integer `{0}` in rational literal")]
    InvalidInteger(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(RationalParseError::Empty);
    }
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| RationalParseError::InvalidInteger(num.to_string()))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| RationalParseError::InvalidInteger(den.to_string()))?;
    if den.is_zero() {
        return Err(RationalParseError::ZeroDenominator(text.to_string()));
    }
    Ok(Rational::new(num, den))
}

/// Canonical `"num/den"` form; integers are written without a denominator.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn integer(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Nearest double. Falls back to a log-domain estimate when numerator or
/// denominator alone overflows `f64`.
pub fn to_f64(value: &Rational) -> f64 {
    if let Some(x) = value.to_f64() {
        if x.is_finite() {
            return x;
        }
    }
    let sign = if value.is_negative() { -1.0 } else { 1.0 };
    let ln = ln_abs_bigint(value.numer()) - ln_abs_bigint(value.denom());
    sign * ln.exp()
}

/// Natural logarithm of a strictly positive rational.
pub fn ln_positive(value: &Rational) -> f64 {
    debug_assert!(value.is_positive());
    match value.to_f64() {
        Some(x) if x.is_normal() => x.ln(),
        _ => ln_abs_bigint(value.numer()) - ln_abs_bigint(value.denom()),
    }
}

fn ln_abs_bigint(value: &BigInt) -> f64 {
    let bits = value.bits();
    if bits <= 1000 {
        return value.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (value.abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Least common multiple of the denominators of `values` (1 for an empty list).
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    use num_integer::Integer;
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}
