//! Exact arithmetic in a real quadratic field F = Q(sqrt(delta)).
//!
//! Ring integers are stored as (a + b*sqrt(delta))/den with den = 2 when
//! delta = 1 mod 4 (then a = b mod 2) and den = 1 otherwise.  All sign and
//! comparison queries are decided exactly; floating point only appears in
//! certified enclosures produced by `embed`.
//!
//! The two real places are labeled so that P1 sends sqrt(delta) to its
//! negative value and P2 to its positive value; P2 is the distinguished
//! hyperbolic place.

use std::collections::HashMap;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::{HtlError, Result};
use crate::interval::Interval;

/// Deltas for which the ring of integers is norm-Euclidean, so the gcd
/// below always terminates.  All are class number one.
pub const SUPPORTED_DELTAS: &[u64] = &[
    2, 3, 5, 6, 7, 11, 13, 17, 19, 21, 29, 33, 37, 41, 57, 73,
];

fn is_square_free(n: u64) -> bool {
    let mut m = n;
    let mut p = 2u64;
    while p * p <= m {
        if m % (p * p) == 0 {
            return false;
        }
        while m % p == 0 {
            m /= p;
        }
        p += 1;
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    pub delta: u64,
    pub ring_shift: bool,
}

impl FieldSpec {
    pub fn new(delta: u64) -> Result<FieldSpec> {
        if delta <= 1 || !is_square_free(delta) {
            return Err(HtlError::InvalidField(format!(
                "delta must be a square-free integer > 1, got {delta}"
            )));
        }
        if !SUPPORTED_DELTAS.contains(&delta) {
            return Err(HtlError::InvalidField(format!(
                "delta {delta} is outside the norm-Euclidean range supported here: {SUPPORTED_DELTAS:?}"
            )));
        }
        Ok(FieldSpec {
            delta,
            ring_shift: delta % 4 == 1,
        })
    }

    pub fn den(&self) -> i64 {
        if self.ring_shift {
            2
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Place {
    P1,
    P2,
}

impl Place {
    fn sign(&self) -> i64 {
        match self {
            Place::P1 => -1,
            Place::P2 => 1,
        }
    }
}

/// Ring integer (a + b*sqrt(delta))/den of F.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadElem {
    pub a: BigInt,
    pub b: BigInt,
    pub spec: FieldSpec,
}

impl QuadElem {
    pub fn new(spec: FieldSpec, a: BigInt, b: BigInt) -> Result<QuadElem> {
        if spec.ring_shift && (&a - &b).is_odd() {
            return Err(HtlError::Domain(format!(
                "coordinates ({a}, {b}) violate the parity rule for delta = {}",
                spec.delta
            )));
        }
        Ok(QuadElem { a, b, spec })
    }

    pub fn from_int(spec: FieldSpec, n: i64) -> QuadElem {
        QuadElem {
            a: BigInt::from(n * spec.den()),
            b: BigInt::zero(),
            spec,
        }
    }

    pub fn from_bigint(spec: FieldSpec, n: &BigInt) -> QuadElem {
        QuadElem {
            a: n * spec.den(),
            b: BigInt::zero(),
            spec,
        }
    }

    pub fn sqrt_delta(spec: FieldSpec) -> QuadElem {
        QuadElem {
            a: BigInt::zero(),
            b: BigInt::from(spec.den()),
            spec,
        }
    }

    /// Module generator omega: (1+sqrt(delta))/2 when shifted, sqrt(delta) otherwise.
    pub fn omega(spec: FieldSpec) -> QuadElem {
        if spec.ring_shift {
            QuadElem {
                a: BigInt::one(),
                b: BigInt::one(),
                spec,
            }
        } else {
            Self::sqrt_delta(spec)
        }
    }

    pub fn zero(spec: FieldSpec) -> QuadElem {
        Self::from_int(spec, 0)
    }

    pub fn one(spec: FieldSpec) -> QuadElem {
        Self::from_int(spec, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn check_spec(&self, other: &QuadElem) {
        assert_eq!(self.spec, other.spec, "mixed field specs");
    }

    pub fn add(&self, other: &QuadElem) -> QuadElem {
        self.check_spec(other);
        QuadElem {
            a: &self.a + &other.a,
            b: &self.b + &other.b,
            spec: self.spec,
        }
    }

    pub fn sub(&self, other: &QuadElem) -> QuadElem {
        self.check_spec(other);
        QuadElem {
            a: &self.a - &other.a,
            b: &self.b - &other.b,
            spec: self.spec,
        }
    }

    pub fn neg(&self) -> QuadElem {
        QuadElem {
            a: -&self.a,
            b: -&self.b,
            spec: self.spec,
        }
    }

    pub fn mul(&self, other: &QuadElem) -> QuadElem {
        self.check_spec(other);
        let delta = BigInt::from(self.spec.delta);
        let num_a = &self.a * &other.a + &delta * &self.b * &other.b;
        let num_b = &self.a * &other.b + &self.b * &other.a;
        if self.spec.ring_shift {
            QuadElem {
                a: num_a / 2,
                b: num_b / 2,
                spec: self.spec,
            }
        } else {
            QuadElem {
                a: num_a,
                b: num_b,
                spec: self.spec,
            }
        }
    }

    pub fn mul_int(&self, n: i64) -> QuadElem {
        QuadElem {
            a: &self.a * n,
            b: &self.b * n,
            spec: self.spec,
        }
    }

    pub fn conj(&self) -> QuadElem {
        QuadElem {
            a: self.a.clone(),
            b: -&self.b,
            spec: self.spec,
        }
    }

    pub fn pow(&self, e: u32) -> QuadElem {
        let mut acc = QuadElem::one(self.spec);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Integer a^2 - delta*b^2 = den^2 * norm; exact and denominator-free.
    pub fn norm_num(&self) -> BigInt {
        &self.a * &self.a - BigInt::from(self.spec.delta) * &self.b * &self.b
    }

    pub fn norm(&self) -> BigRational {
        let d2 = BigInt::from(self.spec.den() * self.spec.den());
        BigRational::new(self.norm_num(), d2)
    }

    /// Field norm of a ring integer, always a rational integer.
    pub fn norm_int(&self) -> BigInt {
        let n = self.norm_num();
        if self.spec.ring_shift {
            n / 4
        } else {
            n
        }
    }

    pub fn trace(&self) -> BigRational {
        BigRational::new(&self.a * 2, BigInt::from(self.spec.den()))
    }

    pub fn trace_int(&self) -> BigInt {
        if self.spec.ring_shift {
            self.a.clone()
        } else {
            &self.a * 2
        }
    }

    pub fn is_unit(&self) -> bool {
        let d2 = BigInt::from(self.spec.den() * self.spec.den());
        self.norm_num().abs() == d2
    }

    /// Inverse of a unit; panics on non-units.
    pub fn unit_inverse(&self) -> QuadElem {
        assert!(self.is_unit(), "unit_inverse of non-unit");
        if self.norm_int() == BigInt::one() {
            self.conj()
        } else {
            self.conj().neg()
        }
    }

    /// Exact sign of the image at a place: -1, 0, or 1.
    pub fn sign_at(&self, p: Place) -> i32 {
        let sa = match self.a.sign() {
            num_bigint::Sign::Minus => -1,
            num_bigint::Sign::NoSign => 0,
            num_bigint::Sign::Plus => 1,
        };
        let sb_raw = match self.b.sign() {
            num_bigint::Sign::Minus => -1,
            num_bigint::Sign::NoSign => 0,
            num_bigint::Sign::Plus => 1,
        };
        let sb = sb_raw * p.sign() as i32;
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        // Opposite signs: compare a^2 against delta*b^2.
        let a2 = &self.a * &self.a;
        let db2 = BigInt::from(self.spec.delta) * &self.b * &self.b;
        match a2.cmp(&db2) {
            std::cmp::Ordering::Greater => sa,
            std::cmp::Ordering::Less => sb,
            std::cmp::Ordering::Equal => 0,
        }
    }

    /// Exact comparison of images at a place.
    pub fn cmp_at(&self, other: &QuadElem, p: Place) -> std::cmp::Ordering {
        self.sub(other).sign_at(p).cmp(&0)
    }

    /// Exact comparison of |image| at a place (compares squares).
    pub fn cmp_abs_at(&self, other: &QuadElem, p: Place) -> std::cmp::Ordering {
        self.mul(self).cmp_at(&other.mul(other), p)
    }

    pub fn is_totally_positive(&self) -> bool {
        self.sign_at(Place::P1) > 0 && self.sign_at(Place::P2) > 0
    }

    /// Certified enclosure of the image at a place.
    pub fn embed(&self, p: Place, prec: u32) -> Interval {
        let den = BigInt::from(self.spec.den());
        let ra = Interval::point(BigRational::new(self.a.clone(), den.clone()));
        let sq = Interval::sqrt_rational(
            &BigRational::from_integer(BigInt::from(self.spec.delta)),
            prec,
        );
        let bq = BigRational::new(&self.b * p.sign(), den);
        ra.add(&sq.scale(&bq))
    }

    pub fn embed_f64(&self, p: Place) -> f64 {
        self.embed(p, 96).midpoint_f64()
    }

    /// x/y when the quotient is again a ring integer.
    pub fn exact_div(&self, other: &QuadElem) -> Option<QuadElem> {
        self.check_spec(other);
        if other.is_zero() {
            return None;
        }
        let delta = BigInt::from(self.spec.delta);
        let big_a = &self.a * &other.a - &delta * &self.b * &other.b;
        let big_b = &self.b * &other.a - &self.a * &other.b;
        let n = other.norm_num();
        let d = BigInt::from(self.spec.den());
        let (qa, ra) = (&big_a * &d).div_rem(&n);
        let (qb, rb) = (&big_b * &d).div_rem(&n);
        if !ra.is_zero() || !rb.is_zero() {
            return None;
        }
        if self.spec.ring_shift && (&qa - &qb).is_odd() {
            return None;
        }
        Some(QuadElem {
            a: qa,
            b: qb,
            spec: self.spec,
        })
    }

    pub fn divides(&self, other: &QuadElem) -> bool {
        other.exact_div(self).is_some()
    }

    /// Coordinates of self/other in the (1, omega) basis, as rationals.
    fn quotient_coords(&self, other: &QuadElem) -> (BigRational, BigRational) {
        let delta = BigInt::from(self.spec.delta);
        let big_a = &self.a * &other.a - &delta * &self.b * &other.b;
        let big_b = &self.b * &other.a - &self.a * &other.b;
        let n = other.norm_num();
        let u0 = BigRational::new(big_a, n.clone());
        let v0 = BigRational::new(big_b, n);
        if self.spec.ring_shift {
            // (a + b sqrt)/2 = (a-b)/2 + b*omega; here quotient = u0 + v0*sqrt.
            (&u0 - &v0, v0 * BigInt::from(2))
        } else {
            (u0, v0)
        }
    }

    fn from_omega_coords(spec: FieldSpec, u: &BigInt, v: &BigInt) -> QuadElem {
        if spec.ring_shift {
            QuadElem {
                a: u * 2 + v,
                b: v.clone(),
                spec,
            }
        } else {
            QuadElem {
                a: u.clone(),
                b: v.clone(),
                spec,
            }
        }
    }

    /// Euclidean gcd; result is some generator of the ideal (self, other).
    pub fn gcd(&self, other: &QuadElem) -> Result<QuadElem> {
        self.check_spec(other);
        let mut x = self.clone();
        let mut y = other.clone();
        while !y.is_zero() {
            let (u, v) = x.quotient_coords(&y);
            let u0 = u.round().to_integer();
            let v0 = v.round().to_integer();
            let ny = y.norm_num().abs();
            let mut found = None;
            'outer: for du in [0i64, 1, -1, 2, -2] {
                for dv in [0i64, 1, -1, 2, -2] {
                    let q = QuadElem::from_omega_coords(self.spec, &(&u0 + du), &(&v0 + dv));
                    let r = x.sub(&q.mul(&y));
                    if r.norm_num().abs() < ny {
                        found = Some(r);
                        break 'outer;
                    }
                }
            }
            match found {
                Some(r) => {
                    x = y;
                    y = r;
                }
                None => {
                    return Err(HtlError::GcdStall {
                        delta: self.spec.delta,
                    })
                }
            }
        }
        Ok(x)
    }

    pub fn gcd3(a: &QuadElem, b: &QuadElem, c: &QuadElem) -> Result<QuadElem> {
        a.gcd(b)?.gcd(c)
    }

    /// Exact square root in F, if one exists.  Since the ring is integrally
    /// closed, a square root of a ring integer is again a ring integer.
    pub fn sqrt_in_field(&self) -> Option<QuadElem> {
        if self.is_zero() {
            return Some(self.clone());
        }
        if self.sign_at(Place::P1) < 0 || self.sign_at(Place::P2) < 0 {
            return None;
        }
        let spec = self.spec;
        let den = BigInt::from(spec.den());
        let two = BigRational::from_integer(BigInt::from(2));
        let mut prec = 96u32;
        while prec <= 4096 {
            let i1 = self.embed(Place::P1, prec);
            let i2 = self.embed(Place::P2, prec);
            let s1 = i1.sqrt(prec);
            let s2 = i2.sqrt(prec);
            let inv_sqrt_delta = Interval::sqrt_rational(
                &BigRational::new(BigInt::one(), BigInt::from(spec.delta)),
                prec,
            );
            let den_iv = Interval::point(BigRational::from_integer(den.clone()));
            // Once both coordinate enclosures have width below 1 they hold
            // at most one integer each, so the sign branch is decided one
            // way or the other; escalate precision only while undecided.
            let mut undecided = false;
            for sign1 in [1i64, -1] {
                let s1s = s1.scale(&BigRational::from_integer(BigInt::from(sign1)));
                // a/den = (s1 + s2)/2, b/den = (s2 - s1)/(2 sqrt(delta))
                let a_iv = s1s
                    .add(&s2)
                    .scale(&(BigRational::one() / &two))
                    .mul(&den_iv);
                let b_iv = s2
                    .sub(&s1s)
                    .scale(&(BigRational::one() / &two))
                    .mul(&inv_sqrt_delta)
                    .mul(&den_iv);
                if a_iv.width() >= BigRational::one() || b_iv.width() >= BigRational::one() {
                    undecided = true;
                    continue;
                }
                let a_c = a_iv.lo.ceil().to_integer();
                if BigRational::from_integer(a_c.clone()) > a_iv.hi {
                    continue;
                }
                let b_c = b_iv.lo.ceil().to_integer();
                if BigRational::from_integer(b_c.clone()) > b_iv.hi {
                    continue;
                }
                if spec.ring_shift && (&a_c - &b_c).is_odd() {
                    continue;
                }
                let cand = QuadElem {
                    a: a_c,
                    b: b_c,
                    spec,
                };
                if cand.mul(&cand) == *self {
                    return Some(cand);
                }
            }
            if !undecided {
                return None;
            }
            prec *= 2;
        }
        None
    }

    pub fn to_wire(&self) -> QuadElemWire {
        QuadElemWire {
            a: self.a.to_string(),
            b: self.b.to_string(),
            half: self.spec.ring_shift,
        }
    }

    pub fn from_wire(spec: FieldSpec, w: &QuadElemWire) -> Result<QuadElem> {
        if w.half != spec.ring_shift {
            return Err(HtlError::Schema(format!(
                "half flag {} does not match delta {}",
                w.half, spec.delta
            )));
        }
        let a = w
            .a
            .parse::<BigInt>()
            .map_err(|e| HtlError::Schema(format!("bad integer {:?}: {e}", w.a)))?;
        let b = w
            .b
            .parse::<BigInt>()
            .map_err(|e| HtlError::Schema(format!("bad integer {:?}: {e}", w.b)))?;
        QuadElem::new(spec, a, b)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadElemWire {
    pub a: String,
    pub b: String,
    pub half: bool,
}

impl std::fmt::Display for QuadElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.spec.ring_shift {
            write!(f, "({} + {}*sqrt({}))/2", self.a, self.b, self.spec.delta)
        } else {
            write!(f, "{} + {}*sqrt({})", self.a, self.b, self.spec.delta)
        }
    }
}

/// General field element (a + b*sqrt(delta))/den with no integrality demand.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadFrac {
    pub a: BigInt,
    pub b: BigInt,
    pub den: BigInt,
    pub spec: FieldSpec,
}

impl QuadFrac {
    pub fn new(spec: FieldSpec, a: BigInt, b: BigInt, den: BigInt) -> QuadFrac {
        assert!(!den.is_zero(), "zero denominator");
        let mut q = QuadFrac { a, b, den, spec };
        q.reduce();
        q
    }

    fn reduce(&mut self) {
        if self.den.is_negative() {
            self.a = -&self.a;
            self.b = -&self.b;
            self.den = -&self.den;
        }
        let g = self.a.gcd(&self.b).gcd(&self.den);
        if g > BigInt::one() {
            self.a = &self.a / &g;
            self.b = &self.b / &g;
            self.den = &self.den / &g;
        }
    }

    pub fn zero(spec: FieldSpec) -> QuadFrac {
        QuadFrac::new(spec, BigInt::zero(), BigInt::zero(), BigInt::one())
    }

    pub fn from_elem(x: &QuadElem) -> QuadFrac {
        QuadFrac::new(x.spec, x.a.clone(), x.b.clone(), BigInt::from(x.spec.den()))
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn add(&self, other: &QuadFrac) -> QuadFrac {
        assert_eq!(self.spec, other.spec);
        QuadFrac::new(
            self.spec,
            &self.a * &other.den + &other.a * &self.den,
            &self.b * &other.den + &other.b * &self.den,
            &self.den * &other.den,
        )
    }

    pub fn sub(&self, other: &QuadFrac) -> QuadFrac {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> QuadFrac {
        QuadFrac {
            a: -&self.a,
            b: -&self.b,
            den: self.den.clone(),
            spec: self.spec,
        }
    }

    pub fn mul(&self, other: &QuadFrac) -> QuadFrac {
        assert_eq!(self.spec, other.spec);
        let delta = BigInt::from(self.spec.delta);
        QuadFrac::new(
            self.spec,
            &self.a * &other.a + &delta * &self.b * &other.b,
            &self.a * &other.b + &self.b * &other.a,
            &self.den * &other.den,
        )
    }

    pub fn conj(&self) -> QuadFrac {
        QuadFrac {
            a: self.a.clone(),
            b: -&self.b,
            den: self.den.clone(),
            spec: self.spec,
        }
    }

    pub fn inverse(&self) -> QuadFrac {
        assert!(!self.is_zero(), "inverse of zero");
        let delta = BigInt::from(self.spec.delta);
        let n = &self.a * &self.a - &delta * &self.b * &self.b;
        QuadFrac::new(
            self.spec,
            &self.a * &self.den,
            -(&self.b * &self.den),
            n,
        )
    }

    pub fn div(&self, other: &QuadFrac) -> QuadFrac {
        self.mul(&other.inverse())
    }

    pub fn norm(&self) -> BigRational {
        let delta = BigInt::from(self.spec.delta);
        BigRational::new(
            &self.a * &self.a - &delta * &self.b * &self.b,
            &self.den * &self.den,
        )
    }

    pub fn sign_at(&self, p: Place) -> i32 {
        let num = QuadElem {
            a: if self.spec.ring_shift {
                &self.a * 2
            } else {
                self.a.clone()
            },
            b: if self.spec.ring_shift {
                &self.b * 2
            } else {
                self.b.clone()
            },
            spec: self.spec,
        };
        num.sign_at(p)
    }

    pub fn embed(&self, p: Place, prec: u32) -> Interval {
        let ra = Interval::point(BigRational::new(self.a.clone(), self.den.clone()));
        let sq = Interval::sqrt_rational(
            &BigRational::from_integer(BigInt::from(self.spec.delta)),
            prec,
        );
        let bq = BigRational::new(&self.b * p.sign(), self.den.clone());
        ra.add(&sq.scale(&bq))
    }

    pub fn embed_f64(&self, p: Place) -> f64 {
        self.embed(p, 96).midpoint_f64()
    }

    /// The same value as a ring integer, when it is one.
    pub fn to_elem(&self) -> Option<QuadElem> {
        let d0 = BigInt::from(self.spec.den());
        let (qa, ra) = (&self.a * &d0).div_rem(&self.den);
        let (qb, rb) = (&self.b * &d0).div_rem(&self.den);
        if !ra.is_zero() || !rb.is_zero() {
            return None;
        }
        if self.spec.ring_shift && (&qa - &qb).is_odd() {
            return None;
        }
        Some(QuadElem {
            a: qa,
            b: qb,
            spec: self.spec,
        })
    }

    pub fn mul_elem(&self, x: &QuadElem) -> QuadFrac {
        self.mul(&QuadFrac::from_elem(x))
    }
}

static UNIT_CACHE: Lazy<Mutex<HashMap<u64, QuadElem>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Generator of the unit group modulo sign: norm +-1, second embedding > 1
/// and minimal among such.  Found by an exhaustive coefficient scan whose
/// box provably covers every unit with second embedding in (1, B].
pub fn fundamental_unit(spec: FieldSpec) -> Result<QuadElem> {
    if let Some(u) = UNIT_CACHE.lock().unwrap().get(&spec.delta) {
        return Ok(u.clone());
    }
    let den = spec.den();
    let d2 = BigInt::from(den * den);
    let sqrt_delta = (spec.delta as f64).sqrt();
    let mut bound: u64 = 8;
    let max_bound: u64 = 1 << 30;
    while bound <= max_bound {
        // Any unit e with iota2(e) in (1, B] has coordinates a in (0, den(B+1)/2]
        // and b in [1, den(B+1)/(2 sqrt(delta))], both nonnegative.
        let b_max = ((den as f64) * (bound as f64 + 1.0) / (2.0 * sqrt_delta)).ceil() as u64 + 1;
        let mut best: Option<QuadElem> = None;
        for b in 1..=b_max {
            let db2 = BigInt::from(spec.delta) * BigInt::from(b) * BigInt::from(b);
            for sgn in [1i64, -1] {
                let t = &db2 + sgn * (den * den);
                if t.is_negative() {
                    continue;
                }
                let a = t.sqrt();
                if &a * &a != t {
                    continue;
                }
                if spec.ring_shift && (&a - BigInt::from(b)).is_odd() {
                    continue;
                }
                let cand = QuadElem {
                    a,
                    b: BigInt::from(b),
                    spec,
                };
                debug_assert_eq!(cand.norm_num().abs(), d2);
                let one = QuadElem::one(spec);
                if cand.cmp_at(&one, Place::P2) != std::cmp::Ordering::Greater {
                    continue;
                }
                best = match best {
                    None => Some(cand),
                    Some(cur) => {
                        if cand.cmp_at(&cur, Place::P2) == std::cmp::Ordering::Less {
                            Some(cand)
                        } else {
                            Some(cur)
                        }
                    }
                };
            }
        }
        if let Some(u) = best {
            let bnd = QuadElem::from_int(spec, bound as i64);
            if u.cmp_at(&bnd, Place::P2) != std::cmp::Ordering::Greater {
                UNIT_CACHE.lock().unwrap().insert(spec.delta, u.clone());
                return Ok(u);
            }
        }
        bound *= 4;
    }
    Err(HtlError::UnitSearchExhausted {
        bound: max_bound as f64,
        detail: format!("no unit with second embedding in (1, {max_bound}] for delta {}", spec.delta),
    })
}

fn height_key(x: &QuadElem) -> QuadElem {
    // Square the element so both embeddings are nonnegative, then take the
    // Galois representative whose P2 image is the larger of the two.
    let s = x.mul(x);
    let sc = s.conj();
    if sc.cmp_at(&s, Place::P2) == std::cmp::Ordering::Greater {
        sc
    } else {
        s
    }
}

fn height_cmp(x: &QuadElem, y: &QuadElem) -> std::cmp::Ordering {
    height_key(x).cmp_at(&height_key(y), Place::P2)
}

fn lex_key(x: &QuadElem) -> (BigInt, BigInt, BigInt, BigInt) {
    (x.a.abs(), x.b.abs(), x.a.clone(), x.b.clone())
}

/// Canonical generator of the principal ideal (x): associate of balanced
/// minimal height max(|iota1|, |iota2|), preferring totally positive
/// representatives, with a lexicographic tie-break.  Deterministic, so
/// ideals compare equal structurally.
pub fn canonical_assoc(x: &QuadElem) -> Result<QuadElem> {
    if x.is_zero() {
        return Ok(x.clone());
    }
    let eps = fundamental_unit(x.spec)?;
    let eps_inv = eps.unit_inverse();
    let mut cur = x.clone();
    loop {
        let up = cur.mul(&eps);
        let down = cur.mul(&eps_inv);
        if height_cmp(&up, &cur) == std::cmp::Ordering::Less {
            cur = up;
        } else if height_cmp(&down, &cur) == std::cmp::Ordering::Less {
            cur = down;
        } else {
            break;
        }
    }
    let mut pool = vec![cur.clone(), cur.mul(&eps), cur.mul(&eps_inv)];
    pool.retain(|c| height_cmp(c, &cur) == std::cmp::Ordering::Equal);
    let mut cands: Vec<QuadElem> = Vec::new();
    for c in pool {
        cands.push(c.neg());
        cands.push(c);
    }
    let pos: Vec<QuadElem> = cands
        .iter()
        .filter(|c| c.is_totally_positive())
        .cloned()
        .collect();
    let field = if pos.is_empty() { cands } else { pos };
    Ok(field.into_iter().min_by_key(lex_key).unwrap())
}

/// Whether x and y generate the same ideal.
pub fn same_ideal(x: &QuadElem, y: &QuadElem) -> bool {
    if x.is_zero() || y.is_zero() {
        return x.is_zero() && y.is_zero();
    }
    match x.exact_div(y) {
        Some(q) => q.is_unit(),
        None => false,
    }
}

/// Regulator of the cusp at infinity: log of the second embedding of the
/// fundamental unit.
pub fn cusp_regulator(spec: FieldSpec) -> Result<f64> {
    let eps = fundamental_unit(spec)?;
    Ok(eps.embed_f64(Place::P2).ln())
}

/// Same quantity via the determinant of the 2x2 log-embedding matrix
/// ((1/2, log|iota1|), (1/2, log|iota2|)).
pub fn cusp_regulator_det(spec: FieldSpec) -> Result<f64> {
    let eps = fundamental_unit(spec)?;
    let l1 = eps.embed_f64(Place::P1).abs().ln();
    let l2 = eps.embed_f64(Place::P2).abs().ln();
    Ok((0.5 * l2 - 0.5 * l1).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(delta: u64) -> FieldSpec {
        FieldSpec::new(delta).unwrap()
    }

    fn q(spec: FieldSpec, a: i64, b: i64) -> QuadElem {
        QuadElem::new(spec, BigInt::from(a), BigInt::from(b)).unwrap()
    }

    #[test]
    fn conjugate_sum_and_product() {
        let s = f(2);
        let x = q(s, 1, 1);
        let y = x.conj();
        assert_eq!(x.add(&y), QuadElem::from_int(s, 2));
        assert_eq!(x.mul(&y), QuadElem::from_int(s, -1));
    }

    #[test]
    fn golden_ratio_norm_trace() {
        let s = f(5);
        let phi = q(s, 1, 1);
        assert_eq!(phi.norm_int(), BigInt::from(-1));
        assert_eq!(phi.trace_int(), BigInt::from(1));
    }

    #[test]
    fn embed_signs() {
        let s = f(2);
        let r = QuadElem::sqrt_delta(s);
        assert!(r.embed_f64(Place::P2) > 1.41 && r.embed_f64(Place::P2) < 1.42);
        assert!(r.embed_f64(Place::P1) < -1.41);
        let s5 = f(5);
        let phi = q(s5, 1, 1);
        let v = phi.embed_f64(Place::P1);
        assert!((v + 0.6180339887).abs() < 1e-9);
    }

    #[test]
    fn exact_sign_near_zero() {
        let s = f(2);
        // 665857 - 470832 sqrt(2) is tiny but positive at P2.
        let x = QuadElem::new(s, BigInt::from(665857i64), BigInt::from(-470832i64)).unwrap();
        assert_eq!(x.sign_at(Place::P2), 1);
        assert_eq!(x.sign_at(Place::P1), 1);
        assert_eq!(x.neg().sign_at(Place::P2), -1);
    }

    #[test]
    fn fundamental_units_small_fields() {
        assert_eq!(fundamental_unit(f(2)).unwrap(), q(f(2), 1, 1));
        assert_eq!(fundamental_unit(f(5)).unwrap(), q(f(5), 1, 1));
        assert_eq!(fundamental_unit(f(3)).unwrap(), q(f(3), 2, 1));
        assert_eq!(fundamental_unit(f(13)).unwrap(), q(f(13), 3, 1));
    }

    #[test]
    fn regulator_routes_agree() {
        for delta in [2u64, 3, 5, 13] {
            let s = f(delta);
            let a = cusp_regulator(s).unwrap();
            let b = cusp_regulator_det(s).unwrap();
            assert!((a - b).abs() < 1e-12, "delta {delta}: {a} vs {b}");
        }
        assert!((cusp_regulator(f(2)).unwrap() - (1.0 + 2f64.sqrt()).ln()).abs() < 1e-12);
    }

    #[test]
    fn exact_division_and_gcd() {
        let s = f(2);
        let x = q(s, 3, 1).mul(&q(s, 5, -2));
        assert_eq!(x.exact_div(&q(s, 3, 1)).unwrap(), q(s, 5, -2));
        assert!(x.exact_div(&q(s, 0, 7)).is_none());
        let g = q(s, 0, 1); // sqrt(2)
        let a = g.mul(&q(s, 3, 1));
        let b = g.mul(&q(s, 7, -3));
        let got = a.gcd(&b).unwrap();
        assert!(same_ideal(&got, &g), "gcd gave {got}");
    }

    #[test]
    fn gcd_shifted_ring() {
        let s = f(5);
        let g = q(s, 1, 1);
        let a = g.mul(&q(s, 4, 2));
        let b = g.mul(&q(s, 3, -1));
        let got = a.gcd(&b).unwrap();
        assert!(got.exact_div(&g).map(|u| u.is_unit()).unwrap_or(false));
    }

    #[test]
    fn sqrt_detection() {
        let s = f(2);
        let x = q(s, 3, 2);
        let sq = x.mul(&x);
        assert!(x.is_totally_positive());
        let r = sq.sqrt_in_field().unwrap();
        assert!(r == x || r == x.neg());
        assert!(q(s, 3, 1).sqrt_in_field().is_none());
        assert!(q(s, -1, 0).sqrt_in_field().is_none());
    }

    #[test]
    fn canonical_assoc_deterministic() {
        let s = f(2);
        let eps = fundamental_unit(s).unwrap();
        let x = q(s, 0, 1);
        let c0 = canonical_assoc(&x).unwrap();
        let c1 = canonical_assoc(&x.mul(&eps).mul(&eps)).unwrap();
        let c2 = canonical_assoc(&x.neg().mul(&eps.unit_inverse())).unwrap();
        assert_eq!(c0, c1);
        assert_eq!(c0, c2);
        assert!(same_ideal(&c0, &x));
    }

    #[test]
    fn ring_axioms_random() {
        let s = f(5);
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % 41) as i64 - 20
        };
        for _ in 0..2000 {
            let mk = |a: i64, b: i64| {
                let b = if (a - b) % 2 != 0 { b + 1 } else { b };
                q(s, a, b)
            };
            let x = mk(next(), next());
            let y = mk(next(), next());
            let z = mk(next(), next());
            assert_eq!(x.mul(&y.mul(&z)), x.mul(&y).mul(&z));
            assert_eq!(x.mul(&y.add(&z)), x.mul(&y).add(&x.mul(&z)));
            assert_eq!(x.mul(&y).norm(), x.norm() * y.norm());
            assert_eq!(x.add(&y).trace(), x.trace() + y.trace());
            assert_eq!(x.conj().conj(), x);
            let n = x.norm();
            let e1 = x.embed(Place::P1, 128);
            let e2 = x.embed(Place::P2, 128);
            let prod = e1.mul(&e2);
            assert!(prod.lo <= n && n <= prod.hi);
            let t = x.trace();
            let sum = e1.add(&e2);
            assert!(sum.lo <= t && t <= sum.hi);
        }
    }

    #[test]
    fn quadfrac_roundtrip() {
        let s = f(5);
        let x = q(s, 3, 1);
        let fr = QuadFrac::from_elem(&x);
        assert_eq!(fr.to_elem().unwrap(), x);
        let half = QuadFrac::new(s, BigInt::from(1), BigInt::from(1), BigInt::from(4));
        assert!(half.to_elem().is_none());
        let doubled = half.add(&half);
        assert_eq!(doubled.to_elem().unwrap(), q(s, 1, 1));
        let inv = fr.inverse();
        assert!(fr.mul(&inv).to_elem().unwrap() == QuadElem::one(s));
    }

    #[test]
    fn wire_roundtrip() {
        let s = f(5);
        let x = q(s, -7, 3).mul(&q(s, 2, 0));
        let w = x.to_wire();
        let back = QuadElem::from_wire(s, &w).unwrap();
        assert_eq!(back, x);
    }
}
