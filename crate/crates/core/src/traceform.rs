//! Geometric side of the hybrid trace formula over a real quadratic field,
//! plus the exact modular group consistency identity and truncated partial
//! zeta functions.
//!
//! For weight m and a Paley-Wiener test function h, the discrete spectrum
//! sum equals an identity term, a sum over elliptic-hyperbolic classes, an
//! elliptic torsion term, and a cusp term driven by the regulators. The
//! class sum is read off a ledger; everything else is closed form in the
//! test function. The spectral side is never computed here: the report is an
//! estimator whose exactly checkable shadow is the modular group identity,
//! which must evaluate to -1/2 in rational arithmetic for every weight.

use crate::error::{HtlError, Result};
use crate::ledger::{EllipticClass, Ledger};
use crate::stats::h_basis;
use crate::transforms::{h_tilde, orbital_identity, TestFunction, TestFunctionWire};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::Serialize;
use std::f64::consts::PI;

/// Everything needed to evaluate the geometric side at one weight.
#[derive(Clone, Debug)]
pub struct TraceConfig {
    /// weight, m >= 1
    pub m: u32,
    /// covolume of the lattice acting on the product of two planes;
    /// supplied by the user, never computed here
    pub vol: f64,
    /// cusp regulators, one per cusp class
    pub regulators: Vec<f64>,
    pub tf: TestFunction,
    /// elliptic census; None means the lattice is treated as torsion free
    pub elliptic: Option<Vec<EllipticClass>>,
}

impl TraceConfig {
    pub fn new(
        m: u32,
        vol: f64,
        regulators: Vec<f64>,
        tf: TestFunction,
        elliptic: Option<Vec<EllipticClass>>,
    ) -> Result<TraceConfig> {
        if m < 1 {
            return Err(HtlError::Domain("weight must be >= 1".into()));
        }
        if !(vol > 0.0) {
            return Err(HtlError::Domain("covolume must be positive".into()));
        }
        if regulators.is_empty() || regulators.iter().any(|r| !(*r > 0.0)) {
            return Err(HtlError::Domain(
                "need at least one positive cusp regulator".into(),
            ));
        }
        Ok(TraceConfig {
            m,
            vol,
            regulators,
            tf,
            elliptic,
        })
    }
}

/// Identity class contribution: (2m-1) vol / (4pi)^2 int h(r) r tanh(pi r) dr.
pub fn identity_term(cfg: &TraceConfig) -> f64 {
    // orbital_identity carries the 1/(4pi) of the integral already
    (2.0 * cfg.m as f64 - 1.0) * cfg.vol * orbital_identity(&cfg.tf) / (4.0 * PI)
}

/// Character window sum_{|k| < m} eps^{lk}, real by k <-> -k symmetry.
fn char_window(theta: f64, l: u32, m: u32) -> f64 {
    let mut s = 1.0;
    for k in 1..m {
        s += 2.0 * (l as f64 * k as f64 * theta).cos();
    }
    s
}

/// Elliptic-hyperbolic class sum:
/// -(1/2) sum_classes sum_l log(rho) hhat(l log rho) /
///        (rho^{l/2} - rho^{-l/2}) (sum_{|k|<m} eps^{lk}).
/// Every ledger entry stands for 2h classes (inverse pair times class
/// number); the ledger must reach T >= e^a or short classes inside the
/// support of hhat could be missing, which is a hard error.
pub fn eh_term(cfg: &TraceConfig, ledger: &Ledger) -> Result<f64> {
    let a = cfg.tf.a;
    if ledger.t_cutoff < a.exp() {
        return Err(HtlError::LedgerTooSmall {
            t: ledger.t_cutoff,
            a,
        });
    }
    let mut total = 0.0;
    for e in &ledger.entries {
        let theta = e.theta();
        let mut inner = 0.0;
        let mut l = 1u32;
        while (l as f64) * e.length < a {
            let ll = l as f64 * e.length;
            inner += cfg.tf.hhat(ll) * char_window(theta, l, cfg.m)
                / (2.0 * (0.5 * ll).sinh());
            l += 1;
        }
        total += 2.0 * e.h as f64 * e.length * inner;
    }
    Ok(-0.5 * total)
}

/// Elliptic torsion contribution:
/// sum over elliptic classes of htilde(theta_2, 0) / (M sin(theta_2 / 2))
/// times H_m(theta_1). The census lists every class (inverses included), so
/// the imaginary parts cancel; the real part is returned.
pub fn elliptic_term(cfg: &TraceConfig) -> Result<f64> {
    let census = match &cfg.elliptic {
        None => return Ok(0.0),
        Some(c) => c,
    };
    let mut total = Complex64::new(0.0, 0.0);
    for cl in census {
        let kernel = h_tilde(&cfg.tf, cl.theta2, 0)?;
        let weight = kernel.re / (cl.order as f64 * (0.5 * cl.theta2).sin());
        total += h_basis(cl.theta1, cfg.m as i32)? * weight;
    }
    Ok(total.re)
}

/// Cusp contribution:
/// -sum_i R_i (hhat(0) + sum_l 2 hhat(2 l R_i) exp(-2 l R_i (m - 1/2))).
/// The l sum is finite because hhat vanishes outside [-a, a].
pub fn cusp_term(cfg: &TraceConfig) -> f64 {
    let a = cfg.tf.a;
    let mut total = 0.0;
    for &r in &cfg.regulators {
        let mut s = cfg.tf.hhat(0.0);
        let mut l = 1u32;
        while 2.0 * l as f64 * r < a {
            let arg = 2.0 * l as f64 * r;
            s += 2.0 * cfg.tf.hhat(arg) * (-arg * (cfg.m as f64 - 0.5)).exp();
            l += 1;
        }
        total += r * s;
    }
    -total
}

/// Assembled geometric side with the per-term breakdown.
#[derive(Clone, Debug, Serialize)]
pub struct TraceReport {
    pub m: u32,
    pub vol: f64,
    pub regulators: Vec<f64>,
    pub tf: TestFunctionWire,
    pub identity_term: f64,
    pub eh_term: f64,
    pub elliptic_term: f64,
    pub cusp_term: f64,
    /// sum of the four terms, an estimate of the discrete spectral sum
    pub spectral_estimate: f64,
    pub truncation_note: String,
    pub warning: Option<String>,
}

pub fn spectral_estimate(cfg: &TraceConfig, ledger: &Ledger) -> Result<TraceReport> {
    let identity = identity_term(cfg);
    let eh = eh_term(cfg, ledger)?;
    let elliptic = elliptic_term(cfg)?;
    let cusp = cusp_term(cfg);
    let estimate = identity + eh + elliptic + cusp;
    let truncation_note = format!(
        "classes from ledger T={:.3e} ({}); elliptic census {}",
        ledger.t_cutoff,
        ledger.completeness_note,
        match &cfg.elliptic {
            None => "absent (treated as torsion free)".to_string(),
            Some(c) => format!("{} classes", c.len()),
        }
    );
    // For m >= 2 the spectral side is a sum of h values at real and low
    // imaginary spectral parameters; a strongly negative estimate for a
    // nonnegative-type h hints at missing geometric input.
    let warning = if cfg.m >= 2 && estimate < -1e-6 {
        Some(format!(
            "spectral estimate {estimate:.6e} is negative; census may be incomplete"
        ))
    } else {
        None
    };
    Ok(TraceReport {
        m: cfg.m,
        vol: cfg.vol,
        regulators: cfg.regulators.clone(),
        tf: cfg.tf.to_wire(),
        identity_term: identity,
        eh_term: eh,
        elliptic_term: elliptic,
        cusp_term: cusp,
        spectral_estimate: estimate,
        truncation_note,
        warning,
    })
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact consistency identity for the modular group: the combination
/// dim M_m - delta_{m,1} - (2m-1)/12 - (elliptic character sum)
/// equals -1/2 for every m >= 1. The elliptic data is one order 2 class at
/// angle pi and an inverse pair of order 3 classes at angles +-2pi/3; their
/// character sums reduce to exact rationals:
///   order 2: (1/2) (-1)^m / (1 - (-1)) = (-1)^m / 4,
///   order 3 pair: 1/3, -1/3, 0 for m = 0, 1, 2 mod 3.
pub fn modular_consistency(m: u32) -> Result<BigRational> {
    if m < 1 {
        return Err(HtlError::Domain("weight must be >= 1".into()));
    }
    let mi = m as i64;
    // dim of the weight m discrete eigenspace (cusp forms of weight 2m)
    let dim = if m == 1 {
        rat(0, 1)
    } else if mi % 6 == 1 {
        rat(mi / 6 - 1, 1)
    } else {
        rat(mi / 6, 1)
    };
    let delta = if m == 1 { rat(1, 1) } else { rat(0, 1) };
    let vol_term = rat(2 * mi - 1, 12);
    let order2 = if mi % 2 == 0 { rat(1, 4) } else { rat(-1, 4) };
    let order3 = match mi % 3 {
        0 => rat(1, 3),
        1 => rat(-1, 3),
        _ => rat(0, 1),
    };
    Ok(dim - delta - vol_term - order2 - order3)
}

/// Truncated partial zeta function
/// Z_m(s) = prod over classes prod_{|k|<m, k2>=0} (1 - eps^k rho^{-s-k2})^{-1}
/// with each ledger entry contributing the factor to the power 2h. Factors
/// with rho^{-Re(s)-k2} below tail_eps are dropped; Re(s) > 1 required.
pub fn zeta_truncated(s: Complex64, m: u32, ledger: &Ledger, tail_eps: f64) -> Result<Complex64> {
    if !(s.re > 1.0) {
        return Err(HtlError::Domain(
            "partial zeta only evaluated for Re(s) > 1".into(),
        ));
    }
    let mut log_z = Complex64::new(0.0, 0.0);
    for e in &ledger.entries {
        let theta = e.theta();
        let mut k2 = 0u32;
        loop {
            let mag = (-(s.re + k2 as f64) * e.length).exp();
            if mag < tail_eps {
                break;
            }
            let base = (-(s + k2 as f64) * e.length).exp();
            for k in -(m as i32 - 1)..m as i32 {
                let factor = Complex64::new(1.0, 0.0)
                    - Complex64::from_polar(1.0, k as f64 * theta) * base;
                log_z -= factor.ln() * (2.0 * e.h as f64);
            }
            k2 += 1;
        }
    }
    Ok(log_z.exp())
}

/// Logarithmic derivative of the partial zeta function:
/// Z'/Z = -sum_classes sum_l log(rho) rho^{(1/2-s)l} /
///        (rho^{l/2} - rho^{-l/2}) (sum_{|k|<m} eps^{kl}).
pub fn zeta_log_derivative(
    s: Complex64,
    m: u32,
    ledger: &Ledger,
    tail_eps: f64,
) -> Result<Complex64> {
    if !(s.re > 1.0) {
        return Err(HtlError::Domain(
            "partial zeta only evaluated for Re(s) > 1".into(),
        ));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for e in &ledger.entries {
        let theta = e.theta();
        let mut l = 1u32;
        loop {
            let ll = l as f64 * e.length;
            if (-s.re * ll).exp() < tail_eps {
                break;
            }
            let num = ((Complex64::new(0.5, 0.0) - s) * ll).exp();
            let den = 2.0 * (0.5 * ll).sinh();
            total += num * (e.length * char_window(theta, l, m) * 2.0 * e.h as f64 / den);
            l += 1;
        }
    }
    Ok(-total)
}
