//! Coefficient fields used by polynomials and measures.
//!
//! Two scalar modes are supported: plain `f64`, and [`Exact`], which stores
//! elements of a real quadratic field `Q(sqrt(r))` as `a + b*sqrt(r)` with
//! arbitrary-precision rational `a`, `b`. Plain rationals are the `b = 0`
//! case. The quadratic extension is what lets explicit measures with atoms at
//! points like `1/sqrt(2)` be checked with residuals that are exactly zero.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Field operations shared by `f64` and [`Exact`].
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_i64(v: i64) -> Self;
    fn from_rational(r: &BigRational) -> Self;
    fn to_f64(&self) -> f64;
    /// `sqrt(k)` for a non-negative integer `k`.
    fn sqrt_int(k: u64) -> Self;
    /// Parses a plain decimal literal such as `12`, `-0.25` or `1e-3`.
    fn parse_decimal(text: &str) -> Option<Self>;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn pow_u32(&self, e: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    /// Magnitude as a float, used for tolerance checks.
    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }

    /// Whether arithmetic in this field is exact.
    const EXACT: bool;

    /// Square-free radicand of the surd part; `1` for rationals and floats.
    fn radicand(&self) -> u64 {
        1
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt_int(k: u64) -> Self {
        (k as f64).sqrt()
    }
    fn parse_decimal(text: &str) -> Option<Self> {
        text.parse::<f64>().ok().filter(|v| v.is_finite())
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Ratio::to_f64 only fails on overflow of both parts; fall back to a
        // scaled division.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Parses `12`, `-3/4`, `0.125`, `1e-3`, `2.5E2` into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((n, d)) = text.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(numer);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

/// An element `rational + surd * sqrt(radicand)` of `Q(sqrt(radicand))`.
///
/// `radicand` is square-free; it is normalised to `1` whenever `surd` is zero,
/// so plain rationals compare equal regardless of where they came from.
/// Combining two values with non-zero surd parts over different radicands is a
/// programming error and panics; input loaders validate radicands up front.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Exact {
    rational: BigRational,
    surd: BigRational,
    radicand: u64,
}

impl Exact {
    pub fn rational(r: BigRational) -> Self {
        Exact { rational: r, surd: BigRational::zero(), radicand: 1 }
    }

    pub fn from_parts(rational: BigRational, surd: BigRational, radicand: u64) -> Self {
        let (outside, inside) = square_free_split(radicand);
        let surd = surd * BigRational::from_integer(BigInt::from(outside));
        if inside == 1 {
            return Exact::rational(rational + surd);
        }
        let mut out = Exact { rational, surd, radicand: inside };
        out.normalise();
        out
    }

    fn normalise(&mut self) {
        if self.surd.is_zero() {
            self.radicand = 1;
        }
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rational
    }

    pub fn surd_part(&self) -> &BigRational {
        &self.surd
    }

    /// Square-free radicand, `1` for rationals.
    pub fn radicand(&self) -> u64 {
        self.radicand
    }

    pub fn is_rational(&self) -> bool {
        self.surd.is_zero()
    }

    fn common_radicand(&self, other: &Exact) -> u64 {
        match (self.radicand, other.radicand) {
            (1, r) | (r, 1) => r,
            (a, b) if a == b => a,
            (a, b) => panic!("cannot combine sqrt({a}) and sqrt({b}) in one exact computation"),
        }
    }

    /// Sign of the value: -1, 0 or 1, computed exactly.
    pub fn signum(&self) -> i32 {
        let r = sign_of(&self.rational);
        let s = sign_of(&self.surd);
        if s == 0 {
            return r;
        }
        if r == 0 || r == s {
            return s;
        }
        // Opposite signs: compare rational^2 with surd^2 * radicand.
        let lhs = &self.rational * &self.rational;
        let rhs = &self.surd * &self.surd * BigRational::from_integer(BigInt::from(self.radicand));
        match lhs.cmp(&rhs) {
            std::cmp::Ordering::Greater => r,
            std::cmp::Ordering::Less => s,
            std::cmp::Ordering::Equal => 0,
        }
    }
}

fn sign_of(r: &BigRational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

/// Splits `k = outside^2 * inside` with `inside` square-free.
fn square_free_split(k: u64) -> (u64, u64) {
    if k == 0 {
        return (0, 1);
    }
    let mut outside = 1u64;
    let mut inside = 1u64;
    let mut rest = k;
    let mut p = 2u64;
    while p * p <= rest {
        let mut count = 0;
        while rest % p == 0 {
            rest /= p;
            count += 1;
        }
        outside *= p.pow(count / 2);
        if count % 2 == 1 {
            inside *= p;
        }
        p += 1;
    }
    inside *= rest;
    (outside, inside)
}

impl fmt::Debug for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.surd.is_zero() {
            return write!(f, "{}", self.rational);
        }
        let surd = format!("{}*sqrt({})", self.surd, self.radicand);
        if self.rational.is_zero() {
            write!(f, "{surd}")
        } else {
            write!(f, "({} + {})", self.rational, surd)
        }
    }
}

impl Add for Exact {
    type Output = Exact;
    fn add(self, rhs: Exact) -> Exact {
        let radicand = self.common_radicand(&rhs);
        let mut out = Exact {
            rational: self.rational + rhs.rational,
            surd: self.surd + rhs.surd,
            radicand,
        };
        out.normalise();
        out
    }
}

impl Sub for Exact {
    type Output = Exact;
    fn sub(self, rhs: Exact) -> Exact {
        self + (-rhs)
    }
}

impl Neg for Exact {
    type Output = Exact;
    fn neg(self) -> Exact {
        Exact { rational: -self.rational, surd: -self.surd, radicand: self.radicand }
    }
}

impl Mul for Exact {
    type Output = Exact;
    fn mul(self, rhs: Exact) -> Exact {
        let radicand = self.common_radicand(&rhs);
        let r = BigRational::from_integer(BigInt::from(radicand));
        let rational = &self.rational * &rhs.rational + &self.surd * &rhs.surd * r;
        let surd = &self.rational * &rhs.surd + &self.surd * &rhs.rational;
        let mut out = Exact { rational, surd, radicand };
        out.normalise();
        out
    }
}

impl Div for Exact {
    type Output = Exact;
    fn div(self, rhs: Exact) -> Exact {
        assert!(!Scalar::is_zero(&rhs), "exact division by zero");
        let radicand = self.common_radicand(&rhs);
        let r = BigRational::from_integer(BigInt::from(radicand));
        // 1 / (a + b sqrt r) = (a - b sqrt r) / (a^2 - r b^2)
        let norm = &rhs.rational * &rhs.rational - &rhs.surd * &rhs.surd * r;
        let conj = Exact {
            rational: rhs.rational / &norm,
            surd: -rhs.surd / &norm,
            radicand,
        };
        self * conj
    }
}

impl Scalar for Exact {
    const EXACT: bool = true;

    fn radicand(&self) -> u64 {
        self.radicand
    }

    fn zero() -> Self {
        Exact::rational(BigRational::zero())
    }
    fn one() -> Self {
        Exact::rational(BigRational::one())
    }
    fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.surd.is_zero()
    }
    fn from_i64(v: i64) -> Self {
        Exact::rational(BigRational::from_integer(BigInt::from(v)))
    }
    fn from_rational(r: &BigRational) -> Self {
        Exact::rational(r.clone())
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(&self.rational)
            + rational_to_f64(&self.surd) * (self.radicand as f64).sqrt()
    }
    fn sqrt_int(k: u64) -> Self {
        Exact::from_parts(BigRational::zero(), BigRational::one(), k)
    }
    fn parse_decimal(text: &str) -> Option<Self> {
        parse_rational(text).map(Exact::rational)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Exact::rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }
}

/// Converts a finite float to the exact rational it represents.
pub fn exact_from_f64(v: f64) -> Option<Exact> {
    BigRational::from_float(v).map(Exact::rational)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d)
    }

    #[test]
    fn parses_decimal_literals_exactly() {
        assert_eq!(parse_rational("0.1").unwrap(), BigRational::new(1.into(), 10.into()));
        assert_eq!(parse_rational("-2.5e-1").unwrap(), BigRational::new((-1).into(), 4.into()));
        assert_eq!(parse_rational("3/6").unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(parse_rational("1E2").unwrap(), BigRational::from_integer(100.into()));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("abc").is_none());
        assert!(parse_rational(".").is_none());
    }

    #[test]
    fn sqrt_two_squares_to_two() {
        let s = Exact::sqrt_int(2);
        assert!(!s.is_rational());
        assert_eq!(s.clone() * s, Exact::from_i64(2));
        let h = Exact::sqrt_int(2) / Exact::from_i64(2);
        assert_eq!(h.clone() * h, q(1, 2));
    }

    #[test]
    fn sqrt_of_square_is_rational() {
        assert_eq!(Exact::sqrt_int(9), Exact::from_i64(3));
        let s8 = Exact::sqrt_int(8);
        assert_eq!(s8.radicand(), 2);
        assert_eq!(s8.surd_part(), &BigRational::from_integer(2.into()));
    }

    #[test]
    fn division_by_surd() {
        let s = Exact::sqrt_int(2);
        let inv = Exact::one() / s.clone();
        assert_eq!(inv * s, Exact::one());
        let a = Exact::from_i64(1) + Exact::sqrt_int(2);
        let b = Exact::from_i64(3) - Exact::sqrt_int(2);
        assert_eq!((a.clone() / b.clone()) * b, a);
    }

    #[test]
    fn odd_surd_powers_cancel_symmetrically() {
        let c = Exact::sqrt_int(2) / Exact::from_i64(2);
        let total = c.pow_u32(3) + (-c).pow_u32(3);
        assert!(total.is_zero());
        assert!(total.is_rational());
    }

    #[test]
    fn exact_sign() {
        let a = Exact::from_i64(1) - Exact::sqrt_int(2);
        assert_eq!(a.signum(), -1);
        let b = Exact::from_i64(3) / Exact::from_i64(2) - Exact::sqrt_int(2);
        assert_eq!(b.signum(), 1);
        assert_eq!(Exact::zero().signum(), 0);
    }

    #[test]
    #[should_panic(expected = "cannot combine")]
    fn mixed_radicands_panic() {
        let _ = Exact::sqrt_int(2) + Exact::sqrt_int(3);
    }

    #[test]
    fn float_round_trip() {
        let v = exact_from_f64(0.375).unwrap();
        assert_eq!(v, q(3, 8));
        assert_eq!(v.to_f64(), 0.375);
        assert!((Exact::sqrt_int(2).to_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
    }
}
