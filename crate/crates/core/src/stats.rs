//! Counting and equidistribution statistics over a class ledger.
//!
//! The elliptic eigenvalues of the census classes equidistribute on the
//! circle with respect to the measure dmu(theta) = sin^2(theta/2) dtheta/pi,
//! and the number of classes with hyperbolic part rho <= T grows like
//! 2 Li(T). This module evaluates the empirical side of those statements
//! (counts, weighted sums, arc frequencies, Weyl coefficients against the
//! H_m basis, class number weighted unit sums) next to the predicted main
//! terms. The asymptotic statements themselves are not assertable at desk
//! scale, so everything here reports numbers; tests only pin down the exact
//! identities (pair cancellation, bookkeeping, basis algebra).

use crate::error::{HtlError, Result};
use crate::ledger::{powers_up_to, Ledger};
use crate::transforms::{adaptive_simpson, composite_gl};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Li(T) = int_2^T dt/log t, the counting normalizer.
pub fn li(t: f64) -> Result<f64> {
    if !(t >= 2.0) {
        return Err(HtlError::Domain("Li(T) needs T >= 2".into()));
    }
    Ok(adaptive_simpson(|x| 1.0 / x.ln(), 2.0, t, 1e-12))
}

/// Integral of f against dmu(theta) = sin^2(theta/2) dtheta/pi on [0, 2pi).
pub fn mu_integral<F: Fn(f64) -> f64>(f: F) -> f64 {
    composite_gl(
        |th| f(th) * (0.5 * th).sin().powi(2) / PI,
        0.0,
        2.0 * PI,
        64 * 16,
    )
}

/// H_m(theta) = e^{im theta} / (1 - e^{i sgn(m) theta}), m != 0.
pub fn h_basis(theta: f64, m: i32) -> Result<Complex64> {
    if m == 0 {
        return Err(HtlError::Domain("H_m needs m != 0".into()));
    }
    let s = if theta.rem_euclid(2.0 * PI).abs() < 1e-12
        || (theta.rem_euclid(2.0 * PI) - 2.0 * PI).abs() < 1e-12
    {
        return Err(HtlError::Domain("H_m singular at theta = 0 mod 2pi".into()));
    } else {
        m.signum() as f64
    };
    let num = Complex64::from_polar(1.0, m as f64 * theta);
    let den = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, s * theta);
    Ok(num / den)
}

/// Squared mu-norm of every H_m: |H_m|^2 dmu = dtheta/(4 pi), total 1/2.
pub const H_NORM_SQ: f64 = 0.5;

/// Fourier coefficients of f against the orthogonal basis {H_m, H_{-m}}.
#[derive(Clone, Debug)]
pub struct WeylProfile {
    pub order: u32,
    /// coefficients for m = 1..order, positive then negative sign
    pub plus: Vec<Complex64>,
    pub minus: Vec<Complex64>,
    /// sup distance between f and its reconstruction on a sample grid
    pub recon_error: f64,
}

/// Coefficient a_f(m) = <f, H_m>_mu / |H_m|^2_mu by quadrature.
fn h_coeff<F: Fn(f64) -> Complex64>(f: &F, m: i32) -> Complex64 {
    let nodes = 200 * 16;
    let v = crate::transforms::composite_gl_c(
        |th| {
            let h = h_basis(th, m).unwrap();
            f(th) * h.conj() * ((0.5 * th).sin().powi(2) / PI)
        },
        1e-9,
        2.0 * PI - 1e-9,
        nodes,
    );
    v / H_NORM_SQ
}

pub fn weyl_profile<F: Fn(f64) -> Complex64>(f: F, order: u32) -> Result<WeylProfile> {
    if order == 0 {
        return Err(HtlError::Domain("profile order must be >= 1".into()));
    }
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for m in 1..=order as i32 {
        plus.push(h_coeff(&f, m));
        minus.push(h_coeff(&f, -m));
    }
    let recon = |th: f64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 1..=order as i32 {
            acc += plus[(m - 1) as usize] * h_basis(th, m).unwrap();
            acc += minus[(m - 1) as usize] * h_basis(th, -m).unwrap();
        }
        acc
    };
    let mut err: f64 = 0.0;
    for i in 1..200 {
        let th = 2.0 * PI * i as f64 / 200.0;
        err = err.max((recon(th) - f(th)).norm());
    }
    Ok(WeylProfile {
        order,
        plus,
        minus,
        recon_error: err,
    })
}

/// Class count against the 2 Li(T) prediction.
#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    pub t: f64,
    /// number of classes with rho <= T; each stored pair contributes 2h
    pub n: u64,
    pub prediction: f64,
    pub ratio: f64,
}

pub fn count_vs_li(ledger: &Ledger, t: f64) -> Result<CountReport> {
    if t > ledger.t_cutoff {
        return Err(HtlError::LedgerTooSmall {
            t: ledger.t_cutoff,
            a: t.ln(),
        });
    }
    let n: u64 = ledger
        .entries
        .iter()
        .filter(|e| e.rho <= t)
        .map(|e| 2 * e.h as u64)
        .sum();
    let prediction = 2.0 * li(t)?;
    let ratio = if prediction != 0.0 {
        n as f64 / prediction
    } else {
        f64::NAN
    };
    Ok(CountReport {
        t,
        n,
        prediction,
        ratio,
    })
}

/// Weighted class sum: each pair contributes h (f(theta) + f(-theta)),
/// against the 2 Li(T) mu(f) prediction.
#[derive(Clone, Debug, Serialize)]
pub struct WeightedReport {
    pub t: f64,
    pub s: f64,
    pub prediction: f64,
    pub residual: f64,
    /// residual / T^(3/4), the fitted envelope constant
    pub envelope_c: f64,
}

pub fn weighted_sum_vs_li<F: Fn(f64) -> f64>(
    ledger: &Ledger,
    f: F,
    t: f64,
) -> Result<WeightedReport> {
    if t > ledger.t_cutoff {
        return Err(HtlError::LedgerTooSmall {
            t: ledger.t_cutoff,
            a: t.ln(),
        });
    }
    let mut s = 0.0;
    for e in ledger.entries.iter().filter(|e| e.rho <= t) {
        let th = e.theta();
        s += e.h as f64 * (f(th) + f(-th));
    }
    let prediction = 2.0 * li(t)? * mu_integral(&f);
    let residual = s - prediction;
    Ok(WeightedReport {
        t,
        s,
        prediction,
        residual,
        envelope_c: residual.abs() / t.powf(0.75),
    })
}

/// Smoothed geodesic sum over primitive classes and their powers:
/// sum of l_prim f(theta) / (2 sinh(l/2)) over total length l <= x,
/// against the 4 e^{x/2} mu(f) prediction.
#[derive(Clone, Debug, Serialize)]
pub struct SmoothedReport {
    pub x: f64,
    pub s: f64,
    pub prediction: f64,
    pub residual: f64,
    /// residual / e^{7x/64}, the spectral-gap envelope constant
    pub envelope_c: f64,
}

pub fn smoothed_geodesic_sum<F: Fn(f64) -> f64>(
    ledger: &Ledger,
    f: F,
    x: f64,
) -> Result<SmoothedReport> {
    // lengths up to x need rho = e^l up to e^x in the ledger
    if x > ledger.t_cutoff.ln() {
        return Err(HtlError::LedgerTooSmall {
            t: ledger.t_cutoff,
            a: x,
        });
    }
    let mut s = 0.0;
    for e in &ledger.entries {
        for (_l, total_len, eps_pow) in powers_up_to(e, x) {
            let th = eps_pow.arg();
            s += e.h as f64 * e.length * (f(th) + f(-th)) / (2.0 * (0.5 * total_len).sinh());
        }
    }
    let prediction = 4.0 * (0.5 * x).exp() * mu_integral(&f);
    let residual = s - prediction;
    Ok(SmoothedReport {
        x,
        s,
        prediction,
        residual,
        envelope_c: residual.abs() / (7.0 * x / 64.0).exp(),
    })
}

/// An arc on the circle given by endpoints in turns (fractions of 2pi).
#[derive(Clone, Copy, Debug)]
pub struct Arc {
    pub start: f64,
    pub end: f64,
}

impl Arc {
    /// membership of an angle, arc taken mod 1 turn
    pub fn contains(&self, theta: f64) -> bool {
        let t = (theta / (2.0 * PI)).rem_euclid(1.0);
        let s = self.start.rem_euclid(1.0);
        let e = self.end.rem_euclid(1.0);
        if (self.end - self.start) >= 1.0 {
            return true;
        }
        if s <= e {
            t >= s && t < e
        } else {
            t >= s || t < e
        }
    }

    pub fn mu_mass(&self) -> f64 {
        if (self.end - self.start) >= 1.0 {
            return mu_integral(|_| 1.0);
        }
        let me = self;
        mu_integral(|th| if me.contains(th) { 1.0 } else { 0.0 })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ArcReport {
    pub t: f64,
    pub empirical: f64,
    pub mu_mass: f64,
    pub discrepancy: f64,
}

/// Fraction of classes with rho <= T whose elliptic angle lands in the arc,
/// against the mu mass of the arc. Both members of each stored pair count.
pub fn arc_test(ledger: &Ledger, arc: Arc, t: f64) -> Result<ArcReport> {
    if t > ledger.t_cutoff {
        return Err(HtlError::LedgerTooSmall {
            t: ledger.t_cutoff,
            a: t.ln(),
        });
    }
    let mut hits = 0u64;
    let mut total = 0u64;
    for e in ledger.entries.iter().filter(|e| e.rho <= t) {
        let w = e.h as u64;
        total += 2 * w;
        if arc.contains(e.theta()) {
            hits += w;
        }
        if arc.contains(-e.theta()) {
            hits += w;
        }
    }
    let empirical = if total > 0 {
        hits as f64 / total as f64
    } else {
        f64::NAN
    };
    let mu_mass = arc.mu_mass();
    Ok(ArcReport {
        t,
        empirical,
        mu_mass,
        discrepancy: (empirical - mu_mass).abs(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct UnitsReport {
    pub t: f64,
    pub s: f64,
    pub prediction: f64,
    pub residual: f64,
}

/// Class number weighted sum over the (D, d) keys with iota_2(eps) < T:
/// sum h(D,d) f(theta of eps), against the mu(f) Li(T^2) prediction.
/// f must be even (each key carries one unit up to inversion).
pub fn units_sum<F: Fn(f64) -> f64>(ledger: &Ledger, f: F, t: f64) -> Result<UnitsReport> {
    if t * t > ledger.t_cutoff {
        return Err(HtlError::LedgerTooSmall {
            t: ledger.t_cutoff,
            a: 2.0 * t.ln(),
        });
    }
    for k in 1..8 {
        let th = 0.7 * k as f64;
        if (f(th) - f(-th)).abs() > 1e-10 {
            return Err(HtlError::Domain(
                "units sum needs an even test function".into(),
            ));
        }
    }
    // iota_2(eps) < T is rho = iota_2(eps)^2 < T^2
    let mut s = 0.0;
    for e in ledger.entries.iter().filter(|e| e.rho < t * t) {
        s += e.h as f64 * f(e.theta());
    }
    let prediction = if t * t >= 2.0 {
        mu_integral(&f) * li(t * t)?
    } else {
        0.0
    };
    Ok(UnitsReport {
        t,
        s,
        prediction,
        residual: s - prediction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{build, LedgerBounds};
    use crate::qfield::FieldSpec;

    #[test]
    fn li_basics() {
        assert_eq!(li(2.0).unwrap(), 0.0);
        let a = li(5.0).unwrap();
        let b = li(10.0).unwrap();
        assert!(b > a && a > 0.0);
        // refined grid oracle
        let oracle = composite_gl(|x| 1.0 / x.ln(), 2.0, 10.0, 4000 * 16);
        assert!((b - oracle).abs() < 1e-9, "{b} vs {oracle}");
        assert!(li(1.5).is_err());
    }

    #[test]
    fn mu_mass_and_moments() {
        assert!((mu_integral(|_| 1.0) - 1.0).abs() < 1e-12);
        assert!((mu_integral(|th| th.cos()) + 0.5).abs() < 1e-12);
        assert!(mu_integral(|th| th.sin()).abs() < 1e-10);
    }

    #[test]
    fn h_basis_identities() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        // sign sum identity H_m + H_{-m} = -sum_{|k|<m} e^{ik theta}
        for _ in 0..100 {
            let th: f64 = rng.gen_range(0.05..6.2);
            let m: i32 = rng.gen_range(1..8);
            let lhs = h_basis(th, m).unwrap() + h_basis(th, -m).unwrap();
            let mut rhs = Complex64::new(0.0, 0.0);
            for k in -(m - 1)..m {
                rhs -= Complex64::from_polar(1.0, k as f64 * th);
            }
            assert!((lhs - rhs).norm() < 1e-12, "theta={th} m={m}");
        }
        let v = h_basis(1.0, 1).unwrap() + h_basis(1.0, -1).unwrap();
        assert!((v - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
        assert!(h_basis(0.0, 1).is_err());
        assert!(h_basis(1.0, 0).is_err());
    }

    #[test]
    fn h_basis_orthogonality_and_norm() {
        let inner = |m: i32, mp: i32| -> Complex64 {
            crate::transforms::composite_gl_c(
                |th| {
                    h_basis(th, m).unwrap()
                        * h_basis(th, mp).unwrap().conj()
                        * ((0.5 * th).sin().powi(2) / PI)
                },
                1e-9,
                2.0 * PI - 1e-9,
                400 * 16,
            )
        };
        for m in [1, 2, 5, -3] {
            assert!((inner(m, m).re - H_NORM_SQ).abs() < 1e-8);
        }
        for (m, mp) in [(1, 2), (3, -3), (2, -1), (4, 5), (-2, -4)] {
            assert!(inner(m, mp).norm() < 1e-8, "m={m} mp={mp}");
        }
    }

    #[test]
    fn weyl_profile_basics() {
        // f = H_3 concentrates at m = 3
        let prof = weyl_profile(|th| h_basis(th, 3).unwrap(), 5).unwrap();
        assert!((prof.plus[2] - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        for (i, c) in prof.plus.iter().enumerate() {
            if i != 2 {
                assert!(c.norm() < 1e-6, "m={} leak {}", i + 1, c.norm());
            }
        }
        for c in &prof.minus {
            assert!(c.norm() < 1e-6);
        }
        assert!(prof.recon_error < 1e-6);
        // constants reconstruct: 1 = -(H_1 + H_{-1})
        let ones = weyl_profile(|_| Complex64::new(1.0, 0.0), 20).unwrap();
        assert!((ones.plus[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-6);
        assert!(ones.recon_error < 1e-6);
    }

    fn delta2_ledger(t: f64) -> Ledger {
        let spec = FieldSpec::new(2).unwrap();
        build(spec, t, LedgerBounds::default()).unwrap()
    }

    #[test]
    fn count_and_pair_cancellation() {
        let led = delta2_ledger(12.0);
        let report = count_vs_li(&led, 12.0).unwrap();
        let by_hand: u64 = led.entries.iter().map(|e| 2 * e.h as u64).sum();
        assert_eq!(report.n, by_hand);
        assert!(count_vs_li(&led, 3.0).unwrap().n <= report.n);
        // odd test functions cancel exactly over inverse pairs
        let odd = weighted_sum_vs_li(&led, |th| th.sin(), 12.0).unwrap();
        assert_eq!(odd.s, 0.0);
        assert!(odd.prediction.abs() < 1e-10);
        // f = 1 reduces to the plain count
        let even = weighted_sum_vs_li(&led, |_| 1.0, 12.0).unwrap();
        assert!((even.s - report.n as f64).abs() < 1e-12);
        assert!(count_vs_li(&led, 50.0).is_err());
    }

    #[test]
    fn units_count_bookkeeping() {
        let led = delta2_ledger(12.0);
        // units with iota2 < T correspond to pairs with rho < T^2 exactly
        let t = 3.2;
        let units = units_sum(&led, |_| 1.0, t).unwrap();
        let pairs: u64 = led
            .entries
            .iter()
            .filter(|e| e.rho < t * t)
            .map(|e| 2 * e.h as u64)
            .sum();
        assert_eq!(2.0 * units.s, pairs as f64);
        assert!(units_sum(&led, |th| th.sin() + 1.0, t).is_err());
        // below the shortest unit nothing is counted
        let small = units_sum(&led, |_| 1.0, 1.2).unwrap();
        assert_eq!(small.s, 0.0);
    }

    #[test]
    fn arcs_partition() {
        let led = delta2_ledger(12.0);
        let full = Arc { start: 0.0, end: 1.0 };
        let r = arc_test(&led, full, 12.0).unwrap();
        assert!((r.empirical - 1.0).abs() < 1e-14);
        assert!((r.mu_mass - 1.0).abs() < 1e-10);
        let left = Arc { start: 0.0, end: 0.5 };
        let right = Arc { start: 0.5, end: 1.0 };
        let rl = arc_test(&led, left, 12.0).unwrap();
        let rr = arc_test(&led, right, 12.0).unwrap();
        assert!((rl.empirical + rr.empirical - 1.0).abs() < 1e-14);
        assert!((rl.mu_mass + rr.mu_mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn smoothed_sum_single_class_hand_check() {
        let led = delta2_ledger(12.0);
        // restrict to lengths <= x that only the shortest class reaches
        let e0 = &led.entries[0];
        let x = e0.length * 1.5;
        let rep = smoothed_geodesic_sum(&led, |_| 1.0, x).unwrap();
        let hand = 2.0 * e0.h as f64 * e0.length / (2.0 * (0.5 * e0.length).sinh());
        assert!(
            (rep.s - hand).abs() < 1e-12,
            "{} vs {hand} (x={x})",
            rep.s
        );
        assert!(smoothed_geodesic_sum(&led, |_| 1.0, 10.0).is_err());
    }
}
