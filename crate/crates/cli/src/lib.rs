//! Library surface of the command-line driver. Every command renders its
//! output to a String so reproducibility (byte identical reruns) can be
//! tested directly without touching the filesystem.

use htl_core::error::{HtlError, Result};
use htl_core::ledger::{build, Ledger, LedgerBounds};
use htl_core::qfield::{cusp_regulator, fundamental_unit, FieldSpec, Place};
use htl_core::ledger::eh_traces;
use htl_core::relorder::{all_units_below, solve_pell, MixedDisc};
use htl_core::stats;
use htl_core::traceform;
use htl_core::transforms::{
    self, cusp_integral_identity_check, h_tilde, ip_difference_check, q_from_hhat, rho_from_q,
    Family, TestFunction,
};
use num_complex::Complex64;
use serde::Serialize;

/// Fixed-width float rendering used in every CSV cell, so that identical
/// configurations always produce identical bytes.
pub fn fm(x: f64) -> String {
    format!("{:.12e}", x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutFormat {
    Json,
    Csv,
}

impl OutFormat {
    pub fn parse(s: &str) -> Result<OutFormat> {
        match s {
            "json" => Ok(OutFormat::Json),
            "csv" => Ok(OutFormat::Csv),
            _ => Err(HtlError::Schema(format!("unknown format {s}"))),
        }
    }
}

/// Worker cap from the HTL_THREADS environment variable. All computations
/// are currently sequential, so any positive cap is trivially honored; the
/// parsed value is still validated and echoed for forward compatibility.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("HTL_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(HtlError::Schema(format!(
                "HTL_THREADS must be a positive integer, got {v:?}"
            ))),
        },
    }
}

#[derive(Serialize)]
struct FieldReport {
    delta: u64,
    unit: htl_core::qfield::QuadElemWire,
    unit_display: String,
    iota1: String,
    iota2: String,
    regulator: String,
}

/// Report the fundamental unit and cusp regulator of the real quadratic
/// field of the given squarefree delta.
pub fn cmd_field(delta: u64) -> Result<String> {
    let spec = FieldSpec::new(delta)?;
    let eps = fundamental_unit(spec)?;
    let rep = FieldReport {
        delta,
        unit: eps.to_wire(),
        unit_display: format!("{eps}"),
        iota1: fm(eps.embed_f64(Place::P1)),
        iota2: fm(eps.embed_f64(Place::P2)),
        regulator: fm(cusp_regulator(spec)?),
    };
    Ok(serde_json::to_string_pretty(&rep)? + "\n")
}

/// Build the class ledger and render it as JSON (full wire form) or CSV.
pub fn cmd_ledger(
    delta: u64,
    t: f64,
    disc_height: i64,
    pell_cap: f64,
    format: OutFormat,
) -> Result<String> {
    let spec = FieldSpec::new(delta)?;
    let bounds = LedgerBounds {
        disc_height,
        pell_cap,
        ..LedgerBounds::default()
    };
    let ledger = build(spec, t, bounds)?;
    match format {
        OutFormat::Json => Ok(ledger.to_json()? + "\n"),
        OutFormat::Csv => Ok(ledger.to_csv()),
    }
}

pub fn load_ledger(json: &str) -> Result<Ledger> {
    Ledger::from_json(json)
}

/// Statistics sweeps over a saved ledger. `which` selects the report:
/// count, weyl, arcs, units, or geodesic. All reports are CSV.
pub fn cmd_stats(
    ledger: &Ledger,
    which: &str,
    t: Option<f64>,
    arc: Option<(f64, f64)>,
) -> Result<String> {
    let t_max = t.unwrap_or(ledger.t_cutoff).min(ledger.t_cutoff);
    match which {
        "count" => {
            let mut out = String::from("t,n,prediction,ratio\n");
            for frac in [0.25, 0.5, 1.0] {
                let tt = (t_max * frac).max(2.5);
                let r = stats::count_vs_li(ledger, tt)?;
                out += &format!("{},{},{},{}\n", fm(r.t), r.n, fm(r.prediction), fm(r.ratio));
            }
            Ok(out)
        }
        "weyl" => {
            // empirical Weyl sums against the H basis; only m = 1 has a
            // nonzero mean under mu
            let mut out = String::from("m,sum_re,sum_im,prediction\n");
            for m in 1..=5i32 {
                let mut s = Complex64::new(0.0, 0.0);
                for e in ledger.entries.iter().filter(|e| e.rho <= t_max) {
                    let th = e.theta();
                    s += (stats::h_basis(th, m)? + stats::h_basis(-th, m)?) * e.h as f64;
                }
                let pred = if m == 1 { -stats::li(t_max)? } else { 0.0 };
                out += &format!("{m},{},{},{}\n", fm(s.re), fm(s.im), fm(pred));
            }
            Ok(out)
        }
        "arcs" => {
            let (s0, e0) = arc.unwrap_or((0.0, 0.5));
            let a = stats::Arc { start: s0, end: e0 };
            let r = stats::arc_test(ledger, a, t_max)?;
            let mut out = String::from("start,end,t,empirical,mu,discrepancy\n");
            out += &format!(
                "{},{},{},{},{},{}\n",
                fm(s0),
                fm(e0),
                fm(r.t),
                fm(r.empirical),
                fm(r.mu_mass),
                fm(r.discrepancy)
            );
            Ok(out)
        }
        "units" => {
            let mut out = String::from("t,s,prediction,residual\n");
            for frac in [0.5, 0.75, 1.0] {
                let tt = t_max.sqrt() * frac;
                if tt <= 1.0 {
                    continue;
                }
                let r = stats::units_sum(ledger, |_| 1.0, tt)?;
                out += &format!(
                    "{},{},{},{}\n",
                    fm(r.t),
                    fm(r.s),
                    fm(r.prediction),
                    fm(r.residual)
                );
            }
            Ok(out)
        }
        "geodesic" => {
            let mut out = String::from("x,s,prediction,residual,envelope_c\n");
            for frac in [0.5, 0.75, 1.0] {
                let x = t_max.ln() * frac;
                let r = stats::smoothed_geodesic_sum(ledger, |_| 1.0, x)?;
                out += &format!(
                    "{},{},{},{},{}\n",
                    fm(r.x),
                    fm(r.s),
                    fm(r.prediction),
                    fm(r.residual),
                    fm(r.envelope_c)
                );
            }
            Ok(out)
        }
        _ => Err(HtlError::Schema(format!("unknown stats report {which}"))),
    }
}

pub fn tf_from_args(family: &str, a: f64, nodes: usize) -> Result<TestFunction> {
    TestFunction::new(Family::parse(family)?, a, nodes)
}

/// Assemble the geometric side at one weight and render the report as JSON.
/// Regulators default to the single cusp regulator of the ledger's field.
pub fn cmd_trace(
    ledger: &Ledger,
    m: u32,
    tf: TestFunction,
    vol: f64,
    regulators: Option<Vec<f64>>,
) -> Result<String> {
    let regs = match regulators {
        Some(r) => r,
        None => vec![cusp_regulator(ledger.spec)?],
    };
    let cfg = traceform::TraceConfig::new(m, vol, regs, tf, None)?;
    let rep = traceform::spectral_estimate(&cfg, ledger)?;
    Ok(serde_json::to_string_pretty(&rep)? + "\n")
}

/// Evaluate the truncated partial zeta function and its logarithmic
/// derivative on an s grid; CSV output.
pub fn cmd_zeta(ledger: &Ledger, m: u32, grid: &[(f64, f64)]) -> Result<String> {
    let mut out = String::from("s_re,s_im,z_re,z_im,dlog_re,dlog_im\n");
    for &(re, im) in grid {
        let s = Complex64::new(re, im);
        let z = traceform::zeta_truncated(s, m, ledger, 1e-14)?;
        let d = traceform::zeta_log_derivative(s, m, ledger, 1e-14)?;
        out += &format!(
            "{},{},{},{},{},{}\n",
            fm(re),
            fm(im),
            fm(z.re),
            fm(z.im),
            fm(d.re),
            fm(d.im)
        );
    }
    Ok(out)
}

fn check_line(out: &mut String, ok: &mut bool, name: &str, pass: bool, detail: String) {
    *ok &= pass;
    out.push_str(&format!(
        "{} {} {}\n",
        if pass { "PASS" } else { "FAIL" },
        name,
        detail
    ));
}

/// Tiny deterministic generator for the identity-check suites; keeps the
/// cli free of an extra dependency.
struct Lcg(u64);

impl Lcg {
    fn next_u32(&mut self) -> u32 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 33) as u32
    }

    fn below(&mut self, n: u32) -> u32 {
        self.next_u32() % n
    }

    fn small(&mut self, half_range: i64) -> i64 {
        self.below((2 * half_range + 1) as u32) as i64 - half_range
    }
}

fn check_transforms(out: &mut String, ok: &mut bool) {
    let tf = TestFunction::new(Family::Bump, 1.0, 320).unwrap();
    let q = q_from_hhat(&tf);
    for m in [0, 1] {
        let rho = rho_from_q(&q, m);
        let mut worst: f64 = 0.0;
        for i in 0..6 {
            let w = tf.s_max() * (i as f64 + 0.3) / 7.0;
            worst = worst.max((rho.q_back(w) - q.eval(w)).abs());
        }
        check_line(
            out,
            ok,
            &format!("kernel-round-trip-m{m}"),
            worst < 1e-6,
            format!("max_err={}", fm(worst)),
        );
    }
    for b in [0.5, 1.5, 2.5] {
        let (_, _, e) = cusp_integral_identity_check(&tf, b).unwrap();
        check_line(
            out,
            ok,
            &format!("cusp-identity-b{b}"),
            e < 1e-7,
            format!("err={}", fm(e)),
        );
    }
    let mut worst: f64 = 0.0;
    for &theta in &[0.8, 2.0] {
        for m in 1..=3 {
            let hi = h_tilde(&tf, theta, m).unwrap();
            let lo = h_tilde(&tf, theta, m - 1).unwrap();
            let lhs = (hi - lo) / (0.5 * theta).sin();
            let rhs = Complex64::from_polar(1.0, m as f64 * theta)
                / (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, theta))
                * tf.h_imag(m as f64 - 0.5);
            worst = worst.max((lhs - rhs).norm() / rhs.norm());
        }
    }
    check_line(
        out,
        ok,
        "elliptic-difference",
        worst < 1e-5,
        format!("max_rel_err={}", fm(worst)),
    );
    let mut worst: f64 = 0.0;
    for m in 0..=2 {
        for t in [0.6, 1.0, 1.5] {
            worst = worst.max(transforms::ihp_value(&tf, m, t).abs());
        }
    }
    check_line(
        out,
        ok,
        "horocycle-vanishing",
        worst < 1e-8,
        format!("max_abs={}", fm(worst)),
    );
    for m in [1, 2] {
        let (_, _, e) = ip_difference_check(&tf, m).unwrap();
        check_line(
            out,
            ok,
            &format!("parabolic-difference-m{m}"),
            e < 1e-4,
            format!("err={}", fm(e)),
        );
    }
}

fn check_modular(out: &mut String, ok: &mut bool) {
    let expect = num_rational::BigRational::new((-1).into(), 2.into());
    let mut all = true;
    for m in 1..=100 {
        let v = traceform::modular_consistency(m).unwrap();
        if v != expect {
            all = false;
        }
        out.push_str(&format!("m={m} {v}\n"));
    }
    check_line(out, ok, "modular-identity-1..100", all, String::new());
}

fn check_forms(out: &mut String, ok: &mut bool) {
    use htl_core::forms::{act, mixed_disc_of, BQForm, GammaElem};
    use htl_core::qfield::QuadElem;
    let spec = FieldSpec::new(2).unwrap();
    let qe = |a: i64, b: i64| QuadElem::new(spec, a.into(), b.into()).unwrap();
    let mut rng = Lcg(0x9e3779b97f4a7c15);
    let mut tested = 0u32;
    let mut failures = 0u32;
    while tested < 200 {
        let a = qe(rng.small(2), rng.small(1));
        let b = qe(rng.small(2), rng.small(1));
        let c = qe(rng.small(2), rng.small(1));
        // screen for a mixed discriminant first; the sign test is cheap
        // and lets the square-discriminant rejection short circuit
        let disc = b.mul(&b).sub(&a.mul(&c).mul_int(4));
        if disc.sign_at(htl_core::qfield::Place::P1) >= 0
            || disc.sign_at(htl_core::qfield::Place::P2) <= 0
        {
            continue;
        }
        let form = match BQForm::new(a, b, c) {
            Ok(f) => f,
            Err(_) => continue,
        };
        if mixed_disc_of(&form).is_err() {
            continue;
        }
        // random word in the standard generators
        let s = GammaElem::new(qe(0, 0), qe(-1, 0), qe(1, 0), qe(0, 0)).unwrap();
        let t1 = GammaElem::new(qe(1, 0), qe(1, 0), qe(0, 0), qe(1, 0)).unwrap();
        let tw = GammaElem::new(qe(1, 0), qe(0, 1), qe(0, 0), qe(1, 0)).unwrap();
        let mut g = GammaElem::identity(spec);
        for _ in 0..4 {
            let pick = match rng.below(4) {
                0 => s.clone(),
                1 => t1.clone(),
                2 => tw.clone(),
                _ => t1.inverse(),
            };
            g = g.mul(&pick);
        }
        let scale = qe(1 + rng.small(1).abs(), 0);
        let moved = act(&form, &scale, &g);
        let inv_ok = htl_core::forms::same_class_invariants(&form, &moved).unwrap_or(false);
        if !inv_ok {
            failures += 1;
        }
        tested += 1;
    }
    check_line(
        out,
        ok,
        "form-invariants-200",
        failures == 0,
        format!("failures={failures}"),
    );
}

fn check_pell(out: &mut String, ok: &mut bool) {
    for delta in [2u64, 5] {
        let spec = FieldSpec::new(delta).unwrap();
        let mut tested = 0u32;
        let mut bad = 0u32;
        for t in eh_traces(spec, 15.0) {
            let four = htl_core::qfield::QuadElem::from_int(spec, 4);
            let w = t.mul(&t).sub(&four);
            let md = match MixedDisc::new(w.clone(), w.clone()) {
                Ok(m) => m,
                Err(_) => continue,
            };
            let direct = solve_pell(&md, 15.0);
            let scan = all_units_below(&md, 15.0).into_iter().next();
            let agree = match (&direct, &scan) {
                (None, None) => true,
                (Some(a), Some(b)) => (a.iota2() - b.iota2()).abs() < 1e-9,
                _ => false,
            };
            if !agree {
                bad += 1;
            }
            tested += 1;
            if tested >= 8 {
                break;
            }
        }
        check_line(
            out,
            ok,
            &format!("pell-minimality-delta{delta}"),
            bad == 0 && tested > 0,
            format!("tested={tested} bad={bad}"),
        );
    }
}

/// Run one of the named identity suites; returns the report and whether
/// everything passed.
pub fn cmd_check(which: &str) -> Result<(String, bool)> {
    let mut out = String::new();
    let mut ok = true;
    match which {
        "transforms" => check_transforms(&mut out, &mut ok),
        "modular" => check_modular(&mut out, &mut ok),
        "forms" => check_forms(&mut out, &mut ok),
        "pell" => check_pell(&mut out, &mut ok),
        _ => return Err(HtlError::Schema(format!("unknown check suite {which}"))),
    }
    Ok((out, ok))
}
