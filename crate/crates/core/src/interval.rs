//! Rational interval arithmetic for certified enclosures.
//!
//! Endpoints are exact rationals, so addition and multiplication are exact;
//! width enters only through square roots, which are enclosed to a requested
//! number of bits via integer square roots.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn point(v: BigRational) -> Self {
        Interval { lo: v.clone(), hi: v }
    }

    pub fn from_int(v: &BigInt) -> Self {
        Self::point(BigRational::from_integer(v.clone()))
    }

    pub fn zero() -> Self {
        Self::point(BigRational::zero())
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval::new(&self.lo + &other.lo, &self.hi + &other.hi)
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        Interval::new(&self.lo - &other.hi, &self.hi - &other.lo)
    }

    pub fn neg(&self) -> Interval {
        Interval::new(-self.hi.clone(), -self.lo.clone())
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let mut candidates = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        candidates.sort();
        Interval::new(candidates[0].clone(), candidates[3].clone())
    }

    pub fn scale(&self, c: &BigRational) -> Interval {
        if c.is_negative() {
            Interval::new(&self.hi * c, &self.lo * c)
        } else {
            Interval::new(&self.lo * c, &self.hi * c)
        }
    }

    /// Enclosure of sqrt(r) for a nonnegative rational, `prec` bits wide.
    pub fn sqrt_rational(r: &BigRational, prec: u32) -> Interval {
        assert!(!r.is_negative(), "sqrt of negative rational");
        if r.is_zero() {
            return Interval::zero();
        }
        let p = r.numer();
        let q = r.denom();
        // sqrt(p/q) = sqrt(p*q)/q
        let pq = p * q;
        let shifted = &pq << (2 * prec as usize);
        let k = shifted.sqrt();
        let denom = q * (BigInt::one() << prec as usize);
        let lo = BigRational::new(k.clone(), denom.clone());
        let hi = BigRational::new(k + BigInt::one(), denom);
        Interval::new(lo, hi)
    }

    /// Outward sqrt of an interval with nonnegative lower bound.
    pub fn sqrt(&self, prec: u32) -> Interval {
        let lo = Self::sqrt_rational(&self.lo, prec);
        let hi = Self::sqrt_rational(&self.hi, prec);
        Interval::new(lo.lo, hi.hi)
    }

    /// Outward-rounded f64 endpoints.
    pub fn to_f64_pair(&self) -> (f64, f64) {
        let lo = self.lo.to_f64().unwrap_or(f64::NEG_INFINITY);
        let hi = self.hi.to_f64().unwrap_or(f64::INFINITY);
        (next_down(lo), next_up(hi))
    }

    pub fn midpoint_f64(&self) -> f64 {
        ((&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2)))
            .to_f64()
            .unwrap_or(f64::NAN)
    }
}

pub fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

pub fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    #[test]
    fn sqrt_two_enclosure() {
        let two = BigRational::from_integer(BigInt::from(2));
        let iv = Interval::sqrt_rational(&two, 80);
        let (lo, hi) = iv.to_f64_pair();
        assert!(lo <= std::f64::consts::SQRT_2 && std::f64::consts::SQRT_2 <= hi);
        assert!(iv.width() < BigRational::from_f64(1e-20).unwrap());
    }

    #[test]
    fn mul_signs() {
        let a = Interval::new(
            BigRational::from_integer(BigInt::from(-2)),
            BigRational::from_integer(BigInt::from(3)),
        );
        let b = Interval::new(
            BigRational::from_integer(BigInt::from(-5)),
            BigRational::from_integer(BigInt::from(1)),
        );
        let p = a.mul(&b);
        assert_eq!(p.lo, BigRational::from_integer(BigInt::from(-15)));
        assert_eq!(p.hi, BigRational::from_integer(BigInt::from(10)));
    }
}
