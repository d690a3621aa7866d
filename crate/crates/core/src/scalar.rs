use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// Numeric type the geometric and probabilistic routines are generic over.
///
/// Implemented for `f32`, `f64` and exact `BigRational`.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + Send + Sync + 'static
{
    fn from_ratio(num: i128, den: i128) -> Self;
    fn from_rational(r: &BigRational) -> Self;
    fn as_f64(&self) -> f64;
    /// Whether arithmetic in this type is exact.
    fn is_exact() -> bool;
    fn floor_i64(&self) -> i64;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n as i128, 1)
    }

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }

    /// `base^exp` for a possibly negative exponent.
    fn powi(base: &Self, exp: i32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp.unsigned_abs() {
            acc = acc * base.clone();
        }
        if exp < 0 {
            Self::one() / acc
        } else {
            acc
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i128, den: i128) -> Self {
        num as f64 / den as f64
    }
    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn is_exact() -> bool {
        false
    }
    fn floor_i64(&self) -> i64 {
        self.floor() as i64
    }
}

impl Scalar for f32 {
    fn from_ratio(num: i128, den: i128) -> Self {
        (num as f64 / den as f64) as f32
    }
    fn from_rational(r: &BigRational) -> Self {
        r.to_f32().unwrap_or(f32::NAN)
    }
    fn as_f64(&self) -> f64 {
        *self as f64
    }
    fn is_exact() -> bool {
        false
    }
    fn floor_i64(&self) -> i64 {
        self.floor() as i64
    }
}

impl Scalar for BigRational {
    fn from_ratio(num: i128, den: i128) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_exact() -> bool {
        true
    }
    fn floor_i64(&self) -> i64 {
        let (q, _) = self.numer().div_mod_floor(self.denom());
        q.to_i64().expect("floor out of range")
    }
}

/// `1 / base^exp` as an exact rational.
pub fn inv_pow(base: u64, exp: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(base).pow(exp))
}

/// Exact rational `num / den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Formats a rational as `p/q` (or `p` when integral).
pub fn rational_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q`, an integer, or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches('-'), frac);
        let n: BigInt = digits.parse().ok()?;
        let d = BigInt::from(10u32).pow(frac.len() as u32);
        let r = BigRational::new(n, d);
        return Some(if neg { -r } else { r });
    }
    s.parse::<BigInt>().ok().map(BigRational::from_integer)
}
