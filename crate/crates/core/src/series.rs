//! Truncated power series in one variable `ε` with exact rational
//! coefficients, and the log-augmented ring `R[[ε]] ⊕ R[[ε]]·log ε` used to
//! accumulate entropy expansions.
//!
//! A [`TruncSeries`] with truncation length `L` stores exactly the
//! coefficients of `ε^0 ..= ε^L`. Everything past degree `L` is unknown, not
//! zero; arithmetic never reports coefficients beyond the truncation.

use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{format_rational, ln_positive, to_f64, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("truncation lengths differ: {left} vs {right}")]
    TruncationMismatch { left: usize, right: usize },
    #[error("division by a series that vanishes through degree {0}")]
    DivisionByZero(usize),
    #[error("numerator order {numerator} is below denominator order {denominator}")]
    OrderViolation { numerator: usize, denominator: usize },
    #[error("logarithm of a series that vanishes through degree {0}")]
    LogOfZero(usize),
    #[error("logarithm of a series with non-positive leading coefficient {0}")]
    NonPositiveLeading(String),
    #[error("log-series evaluated at non-positive ε = {0}")]
    NonPositiveEpsilon(f64),
}

/// Order of a truncated series: the degree of its first non-zero coefficient,
/// or [`Order::TruncatedZero`] when every stored coefficient vanishes.
///
/// `TruncatedZero` compares greater than every finite order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    Finite(usize),
    TruncatedZero,
}

impl Order {
    pub fn finite(self) -> Option<usize> {
        match self {
            Order::Finite(m) => Some(m),
            Order::TruncatedZero => None,
        }
    }

    pub fn is_truncated_zero(self) -> bool {
        matches!(self, Order::TruncatedZero)
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(m) => write!(f, "{m}"),
            Order::TruncatedZero => f.write_str("truncated-zero"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruncSeries {
    coeffs: Vec<Rational>,
}

impl fmt::Debug for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.coeffs.iter().map(format_rational).collect();
        write!(f, "TruncSeries[L={}]({})", self.trunc_len(), terms.join(", "))
    }
}

impl TruncSeries {
    pub fn zero(trunc_len: usize) -> Self {
        Self {
            coeffs: vec![Rational::zero(); trunc_len + 1],
        }
    }

    pub fn one(trunc_len: usize) -> Self {
        Self::constant(Rational::one(), trunc_len)
    }

    pub fn constant(value: Rational, trunc_len: usize) -> Self {
        let mut s = Self::zero(trunc_len);
        s.coeffs[0] = value;
        s
    }

    /// `ε^degree`, or the zero series when `degree > trunc_len`.
    pub fn monomial(degree: usize, trunc_len: usize) -> Self {
        let mut s = Self::zero(trunc_len);
        if degree <= trunc_len {
            s.coeffs[degree] = Rational::one();
        }
        s
    }

    /// Builds a series from leading coefficients; missing ones are zero and
    /// extra ones are dropped.
    pub fn from_coeffs(coeffs: impl IntoIterator<Item = Rational>, trunc_len: usize) -> Self {
        let mut stored: Vec<Rational> = coeffs.into_iter().take(trunc_len + 1).collect();
        stored.resize(trunc_len + 1, Rational::zero());
        Self { coeffs: stored }
    }

    pub fn trunc_len(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, degree: usize) -> &Rational {
        &self.coeffs[degree]
    }

    /// Drops every coefficient above `trunc_len`.
    ///
    /// # Panics
    /// If `trunc_len` exceeds the stored truncation.
    pub fn truncate(&self, trunc_len: usize) -> Self {
        assert!(
            trunc_len <= self.trunc_len(),
            "cannot truncate L={} series to L={trunc_len}",
            self.trunc_len()
        );
        Self {
            coeffs: self.coeffs[..=trunc_len].to_vec(),
        }
    }

    /// Re-truncates to `trunc_len`, zero-padding when it grows. Padding is
    /// only meaningful for series that are exact polynomials.
    pub fn with_trunc_len(&self, trunc_len: usize) -> Self {
        Self::from_coeffs(self.coeffs.iter().cloned(), trunc_len)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn ord(&self) -> Order {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .map_or(Order::TruncatedZero, Order::Finite)
    }

    /// Degree and value of the first non-zero coefficient.
    pub fn leading(&self) -> Option<(usize, &Rational)> {
        self.coeffs.iter().enumerate().find(|(_, c)| !c.is_zero())
    }

    fn check_len(&self, other: &Self) -> Result<(), SeriesError> {
        if self.trunc_len() != other.trunc_len() {
            return Err(SeriesError::TruncationMismatch {
                left: self.trunc_len(),
                right: other.trunc_len(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_len(other)?;
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_len(other)?;
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn neg(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Cauchy product truncated at the common truncation length.
    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_len(other)?;
        Ok(self.mul_truncated(other))
    }

    /// Cauchy product at the smaller of the two truncation lengths.
    pub(crate) fn mul_truncated(&self, other: &Self) -> Self {
        let len = self.coeffs.len().min(other.coeffs.len());
        let mut out = vec![Rational::zero(); len];
        for (i, a) in self.coeffs.iter().take(len).enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().take(len - i).enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Self { coeffs: out }
    }

    pub(crate) fn add_assign_truncated(&mut self, other: &Self) {
        let len = self.coeffs.len().min(other.coeffs.len());
        self.coeffs.truncate(len);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    /// Removes a common factor `ε^m`. The caller guarantees the first `m`
    /// coefficients vanish; the truncation shortens by `m`.
    pub(crate) fn shift_down(&self, m: usize) -> Self {
        debug_assert!(self.coeffs[..m].iter().all(Zero::is_zero));
        Self {
            coeffs: self.coeffs[m..].to_vec(),
        }
    }

    /// Quotient `f / g` as a power series.
    ///
    /// When `ord(g) = m > 0` both operands are divided by `ε^m` first, so the
    /// quotient is known only through degree `L - m`. Coefficient `h_i` depends
    /// on the shifted `f_0..f_i` and `g_0..g_i` only.
    pub fn div(&self, g: &Self) -> Result<Self, SeriesError> {
        self.check_len(g)?;
        let m = match g.ord() {
            Order::Finite(m) => m,
            Order::TruncatedZero => return Err(SeriesError::DivisionByZero(g.trunc_len())),
        };
        if let Order::Finite(fo) = self.ord() {
            if fo < m {
                return Err(SeriesError::OrderViolation {
                    numerator: fo,
                    denominator: m,
                });
            }
        }
        let f = &self.coeffs[m..];
        let g = &g.coeffs[m..];
        let inv_g0 = g[0].recip();
        let mut h: Vec<Rational> = Vec::with_capacity(f.len());
        for i in 0..f.len() {
            let mut acc = f[i].clone();
            for j in 0..i {
                if !h[j].is_zero() && !g[i - j].is_zero() {
                    acc -= &h[j] * &g[i - j];
                }
            }
            h.push(acc * &inv_g0);
        }
        Ok(Self { coeffs: h })
    }

    /// Horner evaluation in double precision.
    pub fn eval(&self, eps: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * eps + to_f64(c))
    }

    /// Expands `log p(ε)` as `m·log ε + log u(0) + log(u(ε)/u(0))` where
    /// `p = ε^m u(ε)` and `u(0) > 0`.
    ///
    /// The log-part is the exact constant `m`; the plain part is computed with
    /// exact rationals and rounded once to `f64`. Both parts carry truncation
    /// `L - m`.
    pub fn log_expand(&self) -> Result<LogSeries, SeriesError> {
        let (m, lead) = self
            .leading()
            .ok_or(SeriesError::LogOfZero(self.trunc_len()))?;
        if !lead.is_positive() {
            return Err(SeriesError::NonPositiveLeading(format_rational(lead)));
        }
        let u = self.shift_down(m);
        let trunc = u.trunc_len();
        let u0 = u.coeffs[0].clone();
        let w: Vec<Rational> = u.coeffs.iter().map(|c| c / &u0).collect();

        // log w with w_0 = 1:  n·l_n = n·w_n − Σ_{j=1}^{n-1} j·l_j·w_{n-j}
        let mut log_w = vec![Rational::zero(); trunc + 1];
        for n in 1..=trunc {
            let mut acc = &w[n] * Rational::from_integer(n.into());
            for j in 1..n {
                if !log_w[j].is_zero() && !w[n - j].is_zero() {
                    acc -= &log_w[j] * &w[n - j] * Rational::from_integer(j.into());
                }
            }
            log_w[n] = acc / Rational::from_integer(n.into());
        }

        let mut plain: Vec<f64> = log_w.iter().map(to_f64).collect();
        plain[0] = ln_positive(&u0);
        Ok(LogSeries {
            plain,
            logpart: TruncSeries::constant(Rational::from_integer(m.into()), trunc),
        })
    }
}

/// `plain(ε) + logpart(ε)·log ε` with real plain coefficients and exact
/// log-coefficients, both truncated at the same degree.
#[derive(Clone, Debug, PartialEq)]
pub struct LogSeries {
    plain: Vec<f64>,
    logpart: TruncSeries,
}

impl LogSeries {
    pub fn zero(trunc_len: usize) -> Self {
        Self {
            plain: vec![0.0; trunc_len + 1],
            logpart: TruncSeries::zero(trunc_len),
        }
    }

    pub fn new(plain: Vec<f64>, logpart: TruncSeries) -> Result<Self, SeriesError> {
        if plain.len() != logpart.coeffs.len() {
            return Err(SeriesError::TruncationMismatch {
                left: plain.len().saturating_sub(1),
                right: logpart.trunc_len(),
            });
        }
        Ok(Self { plain, logpart })
    }

    pub fn trunc_len(&self) -> usize {
        self.logpart.trunc_len()
    }

    pub fn plain(&self) -> &[f64] {
        &self.plain
    }

    pub fn logpart(&self) -> &TruncSeries {
        &self.logpart
    }

    pub fn truncate(&self, trunc_len: usize) -> Self {
        Self {
            plain: self.plain[..=trunc_len].to_vec(),
            logpart: self.logpart.truncate(trunc_len),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        let logpart = self.logpart.add(&other.logpart)?;
        let plain = self.plain.iter().zip(&other.plain).map(|(a, b)| a + b).collect();
        Ok(Self { plain, logpart })
    }

    pub fn neg(&self) -> Self {
        Self {
            plain: self.plain.iter().map(|c| -c).collect(),
            logpart: self.logpart.neg(),
        }
    }

    /// Product with an exact series, truncated at the smaller truncation.
    pub fn mul_series(&self, p: &TruncSeries) -> Self {
        let len = self.plain.len().min(p.coeffs.len());
        let pf: Vec<f64> = p.coeffs[..len].iter().map(to_f64).collect();
        let mut plain = vec![0.0; len];
        for (i, a) in pf.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in self.plain.iter().take(len - i).enumerate() {
                plain[i + j] += a * b;
            }
        }
        Self {
            plain,
            logpart: self.logpart.mul_truncated(p),
        }
    }

    pub fn eval(&self, eps: f64) -> Result<f64, SeriesError> {
        let plain = self.plain.iter().rev().fold(0.0, |acc, c| acc * eps + c);
        if self.logpart.is_zero() {
            return Ok(plain);
        }
        if eps <= 0.0 {
            return Err(SeriesError::NonPositiveEpsilon(eps));
        }
        Ok(plain + self.logpart.eval(eps) * eps.ln())
    }
}

/// How real-valued coefficient sums are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    /// Plain `f64` addition.
    #[default]
    Double,
    /// Double-double accumulation (error-free two-sum), roughly 106 bits.
    Extended,
}

/// A sum of `f64` terms under a chosen [`Precision`].
#[derive(Debug, Clone, Copy, Default)]
pub struct RealSum {
    hi: f64,
    lo: f64,
    extended: bool,
}

impl RealSum {
    pub fn new(precision: Precision) -> Self {
        Self {
            hi: 0.0,
            lo: 0.0,
            extended: precision == Precision::Extended,
        }
    }

    pub fn add(&mut self, x: f64) {
        if !self.extended {
            self.hi += x;
            return;
        }
        let s = self.hi + x;
        let bp = s - self.hi;
        let err = (self.hi - (s - bp)) + (x - bp);
        self.hi = s;
        self.lo += err;
    }

    pub fn merge(&mut self, other: &RealSum) {
        self.add(other.hi);
        if self.extended {
            self.add(other.lo);
        }
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}
