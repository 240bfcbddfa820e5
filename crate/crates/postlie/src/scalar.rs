//! Scalar abstraction: `f64` for numeric mode, `BigRational` for exact mode.
//!
//! The two modes never mix inside an expression; generic code is written
//! once against [`Scalar`] and the concrete type picks the mode, so mixing
//! is a compile-time error rather than a runtime one.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Field operations needed by the matrix and series code.
pub trait Scalar: Clone + PartialEq + std::fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    /// Exact small rational `num/den`.
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Conversion from an exact rational (used for Bernoulli weights).
    fn from_rational(r: &BigRational) -> Self;
    /// Exact lift of an `f64` (every finite float is rational). `None` for
    /// non-finite input.
    fn from_f64_exact(v: f64) -> Option<Self>;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn from_f64_exact(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn from_f64_exact(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Parses a rational from the serialized `"p/q"` (or plain `"p"`) form.
pub fn rational_from_str(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if Zero::is_zero(&q) {
                return None;
            }
            Some(BigRational::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().ok()?;
            Some(BigRational::from_integer(p))
        }
    }
}

/// Renders a rational in the serialized `"p/q"` form (`"p"` when q = 1).
pub fn rational_to_string(r: &BigRational) -> String {
    if r.denom().abs() == BigInt::from(1) {
        format!("{}", r.numer() * r.denom().signum())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip() {
        for s in ["3/4", "-7/2", "5", "0", "-12"] {
            let r = rational_from_str(s).unwrap();
            assert_eq!(rational_to_string(&r), s);
        }
        assert!(rational_from_str("1/0").is_none());
        assert!(rational_from_str("abc").is_none());
    }

    #[test]
    fn exact_f64_lift() {
        let r = BigRational::from_f64_exact(0.5).unwrap();
        assert_eq!(r, BigRational::from_ratio(1, 2));
        assert!(BigRational::from_f64_exact(f64::NAN).is_none());
        // 0.1 lifts to its exact binary value, not 1/10
        let tenth = BigRational::from_f64_exact(0.1).unwrap();
        assert_ne!(tenth, BigRational::from_ratio(1, 10));
        assert!((Scalar::to_f64(&tenth) - 0.1).abs() == 0.0);
    }
}
