//! Census of primitive elliptic-hyperbolic conjugacy classes up to a cutoff,
//! built from the quadratic-form / Pell-unit correspondence, plus a direct
//! matrix-level conjugacy census used as an independent oracle.
//!
//! A class is keyed by the exact square class of its discriminant together
//! with the primitive-discriminant ideal.  Classes are enumerated by the
//! trace t of the fundamental unit: every t in O_F with |iota1(t)| < 2 <
//! iota2(t) is the trace of a norm-one unit of the order with D = t^2 - 4
//! and u = 1, and scanning traces by increasing iota2 makes the first hit
//! per key the fundamental one.
//!
//! Convention: rho is the hyperbolic eigenvalue ratio, so rho = lambda^2
//! where lambda = iota2(epsilon) is the matrix eigenvalue, and the length is
//! log rho = 2 log lambda.  The inverse-class pair is stored once and all
//! consumers weight stored entries by 2.

use std::collections::{HashSet, VecDeque};

use num_bigint::BigInt;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HtlError, Result};
use crate::forms::{class_count, GammaElem};
use crate::qfield::{canonical_assoc, fundamental_unit, same_ideal, FieldSpec, Place, QuadElem, QuadFrac};
use crate::relorder::{MixedDisc, PellUnit, PellUnitWire};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LedgerBounds {
    pub disc_height: i64,
    pub pell_cap: f64,
    pub merge_budget: usize,
}

impl Default for LedgerBounds {
    fn default() -> Self {
        LedgerBounds {
            disc_height: 6,
            pell_cap: 100.0,
            merge_budget: 20000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EHClass {
    pub md: MixedDisc,
    pub unit: PellUnit,
    pub rho: f64,
    pub length: f64,
    pub elliptic: Complex64,
    pub h: usize,
    pub h_certified: bool,
}

impl EHClass {
    pub fn theta(&self) -> f64 {
        self.elliptic.arg()
    }
}

#[derive(Debug, Clone)]
pub struct Ledger {
    pub spec: FieldSpec,
    pub t_cutoff: f64,
    pub bounds: LedgerBounds,
    pub entries: Vec<EHClass>,
    pub completeness_note: String,
}

/// Matrix eigenvalue lambda > 1 attached to a hyperbolic-at-P2 trace.
pub fn lambda_of_trace(t: &QuadElem) -> f64 {
    let t2 = t.embed_f64(Place::P2);
    (t2 + (t2 * t2 - 4.0).sqrt()) / 2.0
}

/// All traces t with |iota1(t)| < 2 < iota2(t) and lambda(t) <= lam_max,
/// sorted by increasing iota2.
pub fn eh_traces(spec: FieldSpec, lam_max: f64) -> Vec<QuadElem> {
    let den = spec.den() as f64;
    let sqrt_delta = (spec.delta as f64).sqrt();
    let t2_max = lam_max + 1.0 / lam_max;
    let a_max = (den * (t2_max + 2.0) / 2.0).ceil() as i64 + 1;
    let b_max = (den * (t2_max + 2.0) / (2.0 * sqrt_delta)).ceil() as i64 + 1;
    let two = QuadElem::from_int(spec, 2);
    let mut out = Vec::new();
    for a in 1..=a_max {
        for b in 1..=b_max {
            if spec.ring_shift && (a - b) % 2 != 0 {
                continue;
            }
            let t = QuadElem::new(spec, BigInt::from(a), BigInt::from(b)).unwrap();
            if t.cmp_abs_at(&two, Place::P1) != std::cmp::Ordering::Less {
                continue;
            }
            if t.cmp_at(&two, Place::P2) != std::cmp::Ordering::Greater {
                continue;
            }
            if lambda_of_trace(&t) > lam_max {
                continue;
            }
            out.push(t);
        }
    }
    out.sort_by(|x, y| x.cmp_at(y, Place::P2));
    out
}

/// Ideal square divisors (g) of w, as canonical generators, g nonunit
/// allowed, deduplicated.
pub fn square_divisors(w: &QuadElem) -> Result<Vec<QuadElem>> {
    let spec = w.spec;
    let den = spec.den() as f64;
    let sqrt_delta = (spec.delta as f64).sqrt();
    let eps2 = fundamental_unit(spec)?.embed_f64(Place::P2);
    let nw = w.norm_int().magnitude().to_string().parse::<f64>().unwrap_or(f64::MAX);
    // A balanced generator of (g) with |N(g)| <= sqrt(|N(w)|) satisfies
    // |iota_p(g)| <= |N(w)|^(1/4) * sqrt(eps2); box with slack 2.
    let bound = nw.powf(0.25) * eps2.sqrt() * 2.0 + 1.0;
    let xa = (den * bound).ceil() as i64;
    let ya = (den * bound / sqrt_delta).ceil() as i64 + 1;
    let mut out: Vec<QuadElem> = Vec::new();
    for a in 0..=xa {
        for b in -ya..=ya {
            if a == 0 && b <= 0 {
                continue;
            }
            if spec.ring_shift && (a - b) % 2 != 0 {
                continue;
            }
            let g = QuadElem::new(spec, BigInt::from(a), BigInt::from(b)).unwrap();
            if w.exact_div(&g.mul(&g)).is_none() {
                continue;
            }
            let c = canonical_assoc(&g)?;
            if !out.iter().any(|x| same_ideal(x, &c)) {
                out.push(c);
            }
        }
    }
    Ok(out)
}

/// Build the census of primitive elliptic-hyperbolic classes with
/// rho <= T, i.e. lambda <= sqrt(T).
pub fn build(spec: FieldSpec, t_cutoff: f64, bounds: LedgerBounds) -> Result<Ledger> {
    if t_cutoff <= 1.0 {
        return Err(HtlError::Domain(format!("cutoff T = {t_cutoff} must exceed 1")));
    }
    let lam_max = t_cutoff.sqrt();
    if bounds.pell_cap < lam_max {
        return Err(HtlError::Domain(format!(
            "pell_cap {} is below the eigenvalue bound sqrt(T) = {lam_max}",
            bounds.pell_cap
        )));
    }
    let traces = eh_traces(spec, lam_max);
    let mut entries: Vec<EHClass> = Vec::new();
    // Dedup key: exact square class of the discriminant plus the
    // primitive-discriminant ideal.
    let mut keys: Vec<(QuadElem, QuadElem)> = Vec::new();
    for t in &traces {
        let w = t.mul(t).sub(&QuadElem::from_int(spec, 4));
        for g in square_divisors(&w)? {
            let d_gen = canonical_assoc(&w.exact_div(&g.mul(&g)).unwrap())?;
            let dup = keys.iter().any(|(wk, dk)| {
                same_ideal(dk, &d_gen) && wk.mul(&w).sqrt_in_field().is_some()
            });
            if dup {
                continue;
            }
            keys.push((w.clone(), d_gen.clone()));
            let md = MixedDisc::new(w.clone(), d_gen)?;
            let unit = PellUnit {
                t: t.clone(),
                u: QuadFrac::new(spec, BigInt::from(1), BigInt::from(0), BigInt::from(1)),
                md: md.clone(),
            };
            debug_assert!(unit.verify());
            let lam = unit.iota2();
            let cc = class_count(&md, bounds.disc_height, bounds.merge_budget)?;
            if cc.h == 0 {
                // A key without any realizing form class corresponds to no
                // conjugacy class (its order is never a centralizer order).
                continue;
            }
            entries.push(EHClass {
                elliptic: unit.elliptic_eigenvalue(),
                rho: lam * lam,
                length: 2.0 * lam.ln(),
                h: cc.h,
                h_certified: cc.certified,
                md,
                unit,
            });
        }
    }
    entries.sort_by(|x, y| {
        x.rho
            .partial_cmp(&y.rho)
            .unwrap()
            .then_with(|| x.md.d_gen.a.cmp(&y.md.d_gen.a))
            .then_with(|| x.md.d_gen.b.cmp(&y.md.d_gen.b))
    });
    let note = format!(
        "traces scanned with iota2 <= {:.6}; square-divisor boxes cover |N(g)| <= sqrt(|N(t^2-4)|); form height {} with merge budget {}",
        lam_max + 1.0 / lam_max,
        bounds.disc_height,
        bounds.merge_budget
    );
    Ok(Ledger {
        spec,
        t_cutoff,
        bounds,
        entries,
        completeness_note: note,
    })
}

/// Powers l >= 1 with l * length <= x: (l, l*length, elliptic^l).
pub fn powers_up_to(e: &EHClass, x: f64) -> Vec<(u32, f64, Complex64)> {
    let mut out = Vec::new();
    if e.length <= 0.0 {
        return out;
    }
    let mut l = 1u32;
    let mut z = e.elliptic;
    while (l as f64) * e.length <= x {
        out.push((l, l as f64 * e.length, z));
        l += 1;
        z *= e.elliptic;
    }
    out
}

// Serialization ------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EHClassWire {
    #[serde(rename = "D")]
    pub disc: crate::qfield::QuadElemWire,
    pub d: crate::qfield::QuadElemWire,
    pub unit: PellUnitWire,
    pub rho: String,
    pub length: String,
    pub theta: String,
    pub h: usize,
    pub h_certified: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerWire {
    pub version: u32,
    pub delta: u64,
    #[serde(rename = "T")]
    pub t_cutoff: f64,
    pub bounds: LedgerBounds,
    pub completeness_note: String,
    pub entries: Vec<EHClassWire>,
}

pub const LEDGER_VERSION: u32 = 1;

impl Ledger {
    pub fn to_wire(&self) -> LedgerWire {
        LedgerWire {
            version: LEDGER_VERSION,
            delta: self.spec.delta,
            t_cutoff: self.t_cutoff,
            bounds: self.bounds,
            completeness_note: self.completeness_note.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| EHClassWire {
                    disc: e.md.disc.to_wire(),
                    d: e.md.d_gen.to_wire(),
                    unit: e.unit.to_wire(),
                    rho: format!("{:.12e}", e.rho),
                    length: format!("{:.12e}", e.length),
                    theta: format!("{:.12e}", e.theta()),
                    h: e.h,
                    h_certified: e.h_certified,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_wire())?)
    }

    pub fn from_wire(w: &LedgerWire) -> Result<Ledger> {
        if w.version != LEDGER_VERSION {
            return Err(HtlError::Schema(format!(
                "ledger version {} unsupported (expected {LEDGER_VERSION})",
                w.version
            )));
        }
        let spec = FieldSpec::new(w.delta)?;
        let mut entries = Vec::new();
        for ew in &w.entries {
            let disc = QuadElem::from_wire(spec, &ew.disc)?;
            let d_gen = QuadElem::from_wire(spec, &ew.d)?;
            let md = MixedDisc::new(disc, d_gen)?;
            let t = QuadElem::from_wire(spec, &ew.unit.t)?;
            let parse = |s: &str| {
                s.parse::<BigInt>()
                    .map_err(|e| HtlError::Schema(format!("bad integer {s:?}: {e}")))
            };
            let u = QuadFrac::new(
                spec,
                parse(&ew.unit.u.a)?,
                parse(&ew.unit.u.b)?,
                parse(&ew.unit.u.den)?,
            );
            let unit = PellUnit { t, u, md: md.clone() };
            if !unit.verify() {
                return Err(HtlError::Schema("unit fails its norm equation".into()));
            }
            let lam = unit.iota2();
            entries.push(EHClass {
                elliptic: unit.elliptic_eigenvalue(),
                rho: lam * lam,
                length: 2.0 * lam.ln(),
                h: ew.h,
                h_certified: ew.h_certified,
                md,
                unit,
            });
        }
        Ok(Ledger {
            spec,
            t_cutoff: w.t_cutoff,
            bounds: w.bounds,
            entries,
            completeness_note: w.completeness_note.clone(),
        })
    }

    pub fn from_json(s: &str) -> Result<Ledger> {
        let w: LedgerWire = serde_json::from_str(s)?;
        Ledger::from_wire(&w)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,length,theta,h,D,d\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{},{},{}\n",
                e.rho,
                e.length,
                e.theta(),
                e.h,
                e.md.disc,
                e.md.d_gen
            ));
        }
        out
    }
}

// Matrix-level censuses ----------------------------------------------------

fn entry_height_ok(g: &GammaElem, bound: i64) -> bool {
    let b = QuadElem::from_int(g.p.spec, bound);
    for x in [&g.p, &g.q, &g.r, &g.s] {
        if x.cmp_abs_at(&b, Place::P1) == std::cmp::Ordering::Greater
            || x.cmp_abs_at(&b, Place::P2) == std::cmp::Ordering::Greater
        {
            return false;
        }
    }
    true
}

/// All det-1 matrices with the given trace whose entries fit in the height
/// box at both places.
pub fn matrices_with_trace(spec: FieldSpec, t: &QuadElem, height: i64) -> Vec<GammaElem> {
    let den = spec.den() as f64;
    let sqrt_delta = (spec.delta as f64).sqrt();
    let xa = (den * height as f64).ceil() as i64;
    let ya = (den * height as f64 / sqrt_delta).ceil() as i64 + 1;
    let one = QuadElem::one(spec);
    let mut out = Vec::new();
    for pa in -xa..=xa {
        for pb in -ya..=ya {
            if spec.ring_shift && (pa - pb) % 2 != 0 {
                continue;
            }
            let p = QuadElem::new(spec, BigInt::from(pa), BigInt::from(pb)).unwrap();
            let n = p.mul(&t.sub(&p)).sub(&one);
            if n.is_zero() {
                continue;
            }
            for qa in -xa..=xa {
                for qb in -ya..=ya {
                    if spec.ring_shift && (qa - qb) % 2 != 0 {
                        continue;
                    }
                    if qa == 0 && qb == 0 {
                        continue;
                    }
                    let q = QuadElem::new(spec, BigInt::from(qa), BigInt::from(qb)).unwrap();
                    let r = match n.exact_div(&q) {
                        Some(r) => r,
                        None => continue,
                    };
                    let s = t.sub(&p);
                    let g = GammaElem {
                        p: p.clone(),
                        q: q.clone(),
                        r,
                        s,
                    }
                    .canonical_sign();
                    if entry_height_ok(&g, height) {
                        out.push(g);
                    }
                }
            }
        }
    }
    out.sort_by_key(|g| {
        (
            g.p.a.clone(),
            g.p.b.clone(),
            g.q.a.clone(),
            g.q.b.clone(),
            g.r.a.clone(),
            g.r.b.clone(),
        )
    });
    out.dedup();
    out
}

fn conj_generators(spec: FieldSpec) -> Result<Vec<GammaElem>> {
    let zero = QuadElem::zero(spec);
    let one = QuadElem::one(spec);
    let omega = QuadElem::omega(spec);
    let eps = fundamental_unit(spec)?;
    let eps_inv = eps.unit_inverse();
    let mut gens = vec![GammaElem::new(zero.clone(), one.neg(), one.clone(), zero.clone())?];
    for n in [one.clone(), one.neg(), omega.clone(), omega.neg()] {
        gens.push(GammaElem::new(one.clone(), n.clone(), zero.clone(), one.clone())?);
        gens.push(GammaElem::new(one.clone(), zero.clone(), n, one.clone())?);
    }
    gens.push(GammaElem {
        p: eps.clone(),
        q: zero.clone(),
        r: zero.clone(),
        s: eps_inv.clone(),
    }
    .canonical_sign());
    let mut all = Vec::new();
    for g in gens {
        all.push(g.inverse());
        all.push(g);
    }
    Ok(all)
}

/// Conjugation ball of a matrix restricted to an entry-height box.
pub fn conjugacy_ball(
    g0: &GammaElem,
    height: i64,
    node_budget: usize,
) -> Result<(HashSet<GammaElem>, bool)> {
    let gens = conj_generators(g0.p.spec)?;
    let mut seen: HashSet<GammaElem> = HashSet::new();
    let mut queue: VecDeque<GammaElem> = VecDeque::new();
    seen.insert(g0.clone());
    queue.push_back(g0.clone());
    while let Some(cur) = queue.pop_front() {
        if seen.len() >= node_budget {
            return Ok((seen, false));
        }
        for c in &gens {
            let next = c.mul(&cur).mul(&c.inverse());
            if !entry_height_ok(&next, height) {
                continue;
            }
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    Ok((seen, true))
}

/// Group a list of matrices into conjugacy classes via ball intersection.
pub fn conjugacy_merge(
    mats: &[GammaElem],
    height: i64,
    node_budget: usize,
) -> Result<(Vec<GammaElem>, bool)> {
    let mut certified = true;
    let mut reps: Vec<GammaElem> = Vec::new();
    let mut balls: Vec<HashSet<GammaElem>> = Vec::new();
    for m in mats {
        if balls.iter().any(|b| b.contains(m)) {
            continue;
        }
        let (ball, ok) = conjugacy_ball(m, height, node_budget)?;
        certified &= ok;
        // A freshly computed ball may still meet an earlier one.
        if let Some(i) = balls.iter().position(|b| !b.is_disjoint(&ball)) {
            balls[i].extend(ball);
            continue;
        }
        reps.push(m.clone());
        balls.push(ball);
    }
    Ok((reps, certified))
}

#[derive(Debug, Clone)]
pub struct EllipticClass {
    pub rep: GammaElem,
    pub order: u32,
    pub theta1: f64,
    pub theta2: f64,
}

/// Best-effort census of torsion (elliptic at both places) classes.
pub fn enumerate_elliptic(
    spec: FieldSpec,
    height: i64,
    budget: usize,
) -> Result<(Vec<EllipticClass>, bool)> {
    let den = spec.den();
    let two = QuadElem::from_int(spec, 2);
    let mut traces = Vec::new();
    let xa = 2 * den as i64;
    let ya = xa;
    for a in -xa..=xa {
        for b in -ya..=ya {
            if spec.ring_shift && (a - b) % 2 != 0 {
                continue;
            }
            let t = QuadElem::new(spec, BigInt::from(a), BigInt::from(b)).unwrap();
            if t.cmp_abs_at(&two, Place::P1) == std::cmp::Ordering::Less
                && t.cmp_abs_at(&two, Place::P2) == std::cmp::Ordering::Less
            {
                traces.push(t);
            }
        }
    }
    let mut mats = Vec::new();
    for t in &traces {
        mats.extend(matrices_with_trace(spec, t, height));
    }
    let (reps, certified) = conjugacy_merge(&mats, 4 * height, budget)?;
    let mut out = Vec::new();
    for rep in reps {
        let mut order = 0u32;
        let mut pw = rep.clone();
        let id = GammaElem::identity(spec);
        for k in 1..=12u32 {
            if pw == id {
                order = k;
                break;
            }
            pw = pw.mul(&rep);
        }
        if order == 0 {
            continue;
        }
        let tr = rep.trace();
        let theta1 = (tr.embed_f64(Place::P1) / 2.0).clamp(-1.0, 1.0).acos() * 2.0;
        let theta2 = (tr.embed_f64(Place::P2) / 2.0).clamp(-1.0, 1.0).acos() * 2.0;
        out.push(EllipticClass {
            rep,
            order,
            theta1,
            theta2,
        });
    }
    Ok((out, certified))
}
