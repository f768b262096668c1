//! Binary quadratic forms over O_F, their equivalence under the Hilbert
//! modular group, desk-scale class counting and automorphs.
//!
//! Equivalence is q'(x,y) = t * q((x,y) g) for t in F^* and g in PSL2(O_F).
//! There is no classical reduction theory here; classes are merged by
//! bounded-height enumeration plus breadth-first orbit exploration with an
//! explicit node budget and a certification flag.

use std::collections::{HashSet, VecDeque};

use num_bigint::BigInt;

use crate::error::{HtlError, Result};
use crate::qfield::{canonical_assoc, fundamental_unit, same_ideal, FieldSpec, Place, QuadElem, QuadFrac};
use crate::relorder::MixedDisc;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BQForm {
    pub a: QuadElem,
    pub b: QuadElem,
    pub c: QuadElem,
}

impl BQForm {
    pub fn new(a: QuadElem, b: QuadElem, c: QuadElem) -> Result<BQForm> {
        if a.is_zero() && b.is_zero() && c.is_zero() {
            return Err(HtlError::Domain("zero form".into()));
        }
        let q = BQForm { a, b, c };
        if q.disc().sqrt_in_field().is_some() {
            return Err(HtlError::Domain(format!(
                "degenerate form with square discriminant {}",
                q.disc()
            )));
        }
        Ok(q)
    }

    pub fn spec(&self) -> FieldSpec {
        self.a.spec
    }

    pub fn disc(&self) -> QuadElem {
        self.b
            .mul(&self.b)
            .sub(&self.a.mul(&self.c).mul_int(4))
    }

    /// Canonical generator of the content ideal (a, b, c).
    pub fn content(&self) -> Result<QuadElem> {
        canonical_assoc(&QuadElem::gcd3(&self.a, &self.b, &self.c)?)
    }

    /// Canonical generator of the primitive discriminant (disc)/(content^2).
    pub fn primitive_disc(&self) -> Result<QuadElem> {
        let g = self.content()?;
        let q = self
            .disc()
            .exact_div(&g.mul(&g))
            .expect("content squared must divide the discriminant");
        canonical_assoc(&q)
    }

    pub fn primitive(&self) -> Result<BQForm> {
        let g = self.content()?;
        Ok(BQForm {
            a: self.a.exact_div(&g).unwrap(),
            b: self.b.exact_div(&g).unwrap(),
            c: self.c.exact_div(&g).unwrap(),
        })
    }

    /// Value q(x, y).
    pub fn eval(&self, x: &QuadElem, y: &QuadElem) -> QuadElem {
        self.a
            .mul(x)
            .mul(x)
            .add(&self.b.mul(x).mul(y))
            .add(&self.c.mul(y).mul(y))
    }

    fn abs_sum_at(&self, p: Place) -> QuadElem {
        let term = |x: &QuadElem| {
            if x.sign_at(p) < 0 {
                x.neg()
            } else {
                x.clone()
            }
        };
        term(&self.a).add(&term(&self.b)).add(&term(&self.c))
    }

    /// Element whose P2 image is the height max_p (|a|+|b|+|c|)_p.
    pub fn height_key(&self) -> QuadElem {
        let k1 = self.abs_sum_at(Place::P1).conj();
        let k2 = self.abs_sum_at(Place::P2);
        if k1.cmp_at(&k2, Place::P2) == std::cmp::Ordering::Greater {
            k1
        } else {
            k2
        }
    }

    pub fn cmp_height(&self, other: &BQForm) -> std::cmp::Ordering {
        self.height_key().cmp_at(&other.height_key(), Place::P2)
    }

    pub fn height_within(&self, bound: i64) -> bool {
        let b = QuadElem::from_int(self.spec(), bound);
        self.height_key().cmp_at(&b, Place::P2) != std::cmp::Ordering::Greater
    }

    fn lex_key(&self) -> Vec<BigInt> {
        let mut v = Vec::with_capacity(12);
        for x in [&self.a, &self.b, &self.c] {
            v.push(x.a.magnitude().clone().into());
            v.push(x.b.magnitude().clone().into());
            v.push(x.a.clone());
            v.push(x.b.clone());
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GammaElem {
    pub p: QuadElem,
    pub q: QuadElem,
    pub r: QuadElem,
    pub s: QuadElem,
}

impl GammaElem {
    pub fn new(p: QuadElem, q: QuadElem, r: QuadElem, s: QuadElem) -> Result<GammaElem> {
        let det = p.mul(&s).sub(&q.mul(&r));
        if det != QuadElem::one(p.spec) {
            return Err(HtlError::Domain(format!("matrix determinant {det} is not 1")));
        }
        Ok(GammaElem { p, q, r, s }.canonical_sign())
    }

    /// Fixes the projective sign: first nonzero coordinate positive at P2.
    pub fn canonical_sign(self) -> GammaElem {
        let mut flip = 0;
        for x in [&self.p, &self.q, &self.r, &self.s] {
            let s = x.sign_at(Place::P2);
            if s != 0 {
                flip = s;
                break;
            }
        }
        if flip < 0 {
            GammaElem {
                p: self.p.neg(),
                q: self.q.neg(),
                r: self.r.neg(),
                s: self.s.neg(),
            }
        } else {
            self
        }
    }

    pub fn identity(spec: FieldSpec) -> GammaElem {
        GammaElem {
            p: QuadElem::one(spec),
            q: QuadElem::zero(spec),
            r: QuadElem::zero(spec),
            s: QuadElem::one(spec),
        }
    }

    pub fn mul(&self, o: &GammaElem) -> GammaElem {
        GammaElem {
            p: self.p.mul(&o.p).add(&self.q.mul(&o.r)),
            q: self.p.mul(&o.q).add(&self.q.mul(&o.s)),
            r: self.r.mul(&o.p).add(&self.s.mul(&o.r)),
            s: self.r.mul(&o.q).add(&self.s.mul(&o.s)),
        }
        .canonical_sign()
    }

    pub fn inverse(&self) -> GammaElem {
        GammaElem {
            p: self.s.clone(),
            q: self.q.neg(),
            r: self.r.neg(),
            s: self.p.clone(),
        }
        .canonical_sign()
    }

    pub fn trace(&self) -> QuadElem {
        self.p.add(&self.s)
    }
}

/// Composed form t * (q o g), with g acting on column vectors; this is the
/// convention under which the automorph below fixes its form.
pub fn act(form: &BQForm, t: &QuadElem, g: &GammaElem) -> BQForm {
    assert!(!t.is_zero(), "scaling by zero");
    let a2 = form.eval(&g.p, &g.r);
    let c2 = form.eval(&g.q, &g.s);
    let b2 = form
        .a
        .mul(&g.p)
        .mul(&g.q)
        .mul_int(2)
        .add(&form.b.mul(&g.p.mul(&g.s).add(&g.q.mul(&g.r))))
        .add(&form.c.mul(&g.r).mul(&g.s).mul_int(2));
    BQForm {
        a: t.mul(&a2),
        b: t.mul(&b2),
        c: t.mul(&c2),
    }
}

fn move_set(spec: FieldSpec) -> Result<Vec<(QuadElem, GammaElem)>> {
    let one = QuadElem::one(spec);
    let eps = fundamental_unit(spec)?;
    let eps_inv = eps.unit_inverse();
    let id = GammaElem::identity(spec);
    let zero = QuadElem::zero(spec);
    let s_mat = GammaElem::new(zero.clone(), QuadElem::one(spec).neg(), QuadElem::one(spec), zero.clone())?;
    let omega = QuadElem::omega(spec);
    let mut moves = vec![
        (eps, id.clone()),
        (eps_inv, id.clone()),
        (one.neg(), id.clone()),
        (one.clone(), s_mat),
    ];
    for n in [
        QuadElem::one(spec),
        QuadElem::one(spec).neg(),
        omega.clone(),
        omega.neg(),
    ] {
        let upper = GammaElem::new(
            QuadElem::one(spec),
            n.clone(),
            QuadElem::zero(spec),
            QuadElem::one(spec),
        )?;
        let lower = GammaElem::new(
            QuadElem::one(spec),
            QuadElem::zero(spec),
            n.clone(),
            QuadElem::one(spec),
        )?;
        moves.push((one.clone(), upper));
        moves.push((one.clone(), lower));
    }
    Ok(moves)
}

fn form_order(x: &BQForm, y: &BQForm) -> std::cmp::Ordering {
    x.cmp_height(y).then_with(|| x.lex_key().cmp(&y.lex_key()))
}

/// Deterministic greedy descent to a locally minimal representative, with a
/// depth-three lookahead to escape shallow plateaus.  Returns the
/// representative and whether it settled within the budget.
pub fn canonical_rep(form: &BQForm, budget: usize) -> Result<(BQForm, bool)> {
    let moves = move_set(form.spec())?;
    let mut cur = form.clone();
    let mut steps = 0usize;
    loop {
        // Greedy single-step phase.
        loop {
            if steps >= budget {
                return Ok((cur, false));
            }
            steps += 1;
            let best = moves
                .iter()
                .map(|(t, g)| act(&cur, t, g))
                .min_by(form_order)
                .unwrap();
            if form_order(&best, &cur) == std::cmp::Ordering::Less {
                cur = best;
            } else {
                break;
            }
        }
        // Lookahead: smallest form in the depth-3 move ball.
        let mut frontier = vec![cur.clone()];
        let mut seen: HashSet<BQForm> = frontier.iter().cloned().collect();
        let mut best = cur.clone();
        for _ in 0..3 {
            let mut next_frontier = Vec::new();
            for f in &frontier {
                for (t, g) in &moves {
                    let nf = act(f, t, g);
                    if seen.insert(nf.clone()) {
                        if form_order(&nf, &best) == std::cmp::Ordering::Less {
                            best = nf.clone();
                        }
                        next_frontier.push(nf);
                    }
                }
            }
            frontier = next_frontier;
        }
        if form_order(&best, &cur) == std::cmp::Ordering::Less {
            cur = best;
        } else {
            return Ok((cur, true));
        }
    }
}

/// Orbit ball around a form, restricted to heights at most `height_bound`,
/// with at most `node_budget` nodes.  Second component: whether the
/// restricted orbit closure stabilized.
pub fn orbit_ball(
    form: &BQForm,
    height_bound: i64,
    node_budget: usize,
) -> Result<(HashSet<BQForm>, bool)> {
    let moves = move_set(form.spec())?;
    let mut seen: HashSet<BQForm> = HashSet::new();
    let mut queue: VecDeque<BQForm> = VecDeque::new();
    seen.insert(form.clone());
    queue.push_back(form.clone());
    while let Some(cur) = queue.pop_front() {
        if seen.len() >= node_budget {
            return Ok((seen, false));
        }
        for (t, g) in &moves {
            let next = act(&cur, t, g);
            if !next.height_within(height_bound) {
                continue;
            }
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    Ok((seen, true))
}

#[derive(Debug, Clone)]
pub struct ClassCount {
    pub h: usize,
    pub certified: bool,
    pub reps: Vec<BQForm>,
}

/// Primitive forms of height at most `height` whose discriminant lies in the
/// exact square class of md.disc with primitive discriminant md.d_gen.
pub fn enumerate_forms(md: &MixedDisc, height: i64) -> Result<Vec<BQForm>> {
    let spec = md.spec();
    let den = spec.den();
    let sqrt_delta = (spec.delta as f64).sqrt();
    let eps = fundamental_unit(spec)?;
    let eps_inv = eps.unit_inverse();
    let disc_bound = 5 * height * height;

    // Candidate discriminants: d * unit, mixed signature, exact square class
    // of md.disc, bounded by the largest b^2 - 4ac a height-bounded form
    // can reach.
    let mut discs: Vec<QuadElem> = Vec::new();
    let mut tw = md.d_gen.clone();
    for _ in 0..13 {
        tw = tw.mul(&eps_inv);
    }
    for _ in 0..27 {
        tw = tw.mul(&eps);
        for sgn in [1i64, -1] {
            let cand = tw.mul_int(sgn);
            if cand.sign_at(Place::P1) >= 0 || cand.sign_at(Place::P2) <= 0 {
                continue;
            }
            let bnd = QuadElem::from_int(spec, disc_bound);
            if cand.cmp_abs_at(&bnd, Place::P1) == std::cmp::Ordering::Greater
                || cand.cmp_abs_at(&bnd, Place::P2) == std::cmp::Ordering::Greater
            {
                continue;
            }
            // Exact square-class test: cand * disc must be a square.
            if cand.mul(&md.disc).sqrt_in_field().is_none() {
                continue;
            }
            if !discs.contains(&cand) {
                discs.push(cand);
            }
        }
    }

    let xa_max = (den as i64) * height;
    let ya_max = (((den as i64 * height) as f64) / sqrt_delta).ceil() as i64 + 1;
    let mut out: Vec<BQForm> = Vec::new();
    for disc in &discs {
        for xa in -xa_max..=xa_max {
            for ya in -ya_max..=ya_max {
                if spec.ring_shift && (xa - ya) % 2 != 0 {
                    continue;
                }
                if xa == 0 && ya == 0 {
                    continue;
                }
                let a = QuadElem::new(spec, BigInt::from(xa), BigInt::from(ya)).unwrap();
                for xb in -xa_max..=xa_max {
                    for yb in -ya_max..=ya_max {
                        if spec.ring_shift && (xb - yb) % 2 != 0 {
                            continue;
                        }
                        let b = QuadElem::new(spec, BigInt::from(xb), BigInt::from(yb)).unwrap();
                        let num = b.mul(&b).sub(disc);
                        let c = match num.exact_div(&a.mul_int(4)) {
                            Some(c) => c,
                            None => continue,
                        };
                        let q = BQForm {
                            a: a.clone(),
                            b,
                            c,
                        };
                        if !q.height_within(height) {
                            continue;
                        }
                        let g = QuadElem::gcd3(&q.a, &q.b, &q.c)?;
                        if !g.is_unit() {
                            continue;
                        }
                        out.push(q);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Desk-scale class count h(D, d): enumerate, reduce, merge by bounded BFS.
pub fn class_count(md: &MixedDisc, height: i64, budget: usize) -> Result<ClassCount> {
    let forms = enumerate_forms(md, height)?;
    let mut certified = true;
    // Cheap greedy pass first; the lookahead only runs once per distinct
    // greedy representative.
    let moves = move_set(md.spec())?;
    let mut greedy_reps: HashSet<BQForm> = HashSet::new();
    for q in &forms {
        let mut cur = q.clone();
        for _ in 0..budget {
            let best = moves
                .iter()
                .map(|(t, g)| act(&cur, t, g))
                .min_by(form_order)
                .unwrap();
            if form_order(&best, &cur) == std::cmp::Ordering::Less {
                cur = best;
            } else {
                break;
            }
        }
        greedy_reps.insert(cur);
    }
    let mut reps: Vec<BQForm> = Vec::new();
    for q in &greedy_reps {
        let (rep, ok) = canonical_rep(q, budget)?;
        certified &= ok;
        if !reps.contains(&rep) {
            reps.push(rep);
        }
    }
    reps.sort_by(form_order);
    // Merge representatives whose orbit balls intersect.
    let explore_height = 4 * height;
    let balls: Vec<(HashSet<BQForm>, bool)> = reps
        .iter()
        .map(|r| orbit_ball(r, explore_height, budget))
        .collect::<Result<_>>()?;
    for (_, ok) in &balls {
        certified &= ok;
    }
    let n = reps.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if balls[i].0.intersection(&balls[j].0).next().is_some() {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut class_reps: Vec<BQForm> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        if !roots.contains(&r) {
            roots.push(r);
            class_reps.push(reps[r].clone());
        }
    }
    class_reps.sort_by(form_order);
    Ok(ClassCount {
        h: class_reps.len(),
        certified,
        reps: class_reps,
    })
}

/// Automorph of q attached to a norm-one order unit (t + u sqrt(D))/2:
/// ((t - b u)/2, -c u; a u, (t + b u)/2).
pub fn automorph(q: &BQForm, t: &QuadElem, u: &QuadFrac) -> Result<GammaElem> {
    let spec = q.spec();
    let half = QuadFrac::new(spec, BigInt::from(1), BigInt::from(0), BigInt::from(2));
    let tf = QuadFrac::from_elem(t);
    let to_elem = |x: QuadFrac, label: &str| {
        x.to_elem().ok_or_else(|| {
            HtlError::NonIntegralEntry(format!(
                "automorph entry {label} = ({} + {} sqrt)/{} is not integral",
                x.a, x.b, x.den
            ))
        })
    };
    let p = to_elem(
        tf.sub(&u.mul_elem(&q.b)).mul(&half),
        "(t - b u)/2",
    )?;
    let s = to_elem(
        tf.add(&u.mul_elem(&q.b)).mul(&half),
        "(t + b u)/2",
    )?;
    let qq = to_elem(u.mul_elem(&q.c).neg(), "-c u")?;
    let r = to_elem(u.mul_elem(&q.a), "a u")?;
    GammaElem::new(p, qq, r, s)
}

/// MixedDisc carried by a form: its discriminant with its primitive divisor.
pub fn mixed_disc_of(q: &BQForm) -> Result<MixedDisc> {
    MixedDisc::new(q.disc(), q.primitive_disc()?)
}

/// Whether two forms are related by the exact-square-class relation on
/// discriminants together with equal primitive discriminant ideals.
pub fn same_class_invariants(x: &BQForm, y: &BQForm) -> Result<bool> {
    if x.mul_disc_square_class(y)? {
        let dx = x.primitive_disc()?;
        let dy = y.primitive_disc()?;
        return Ok(same_ideal(&dx, &dy));
    }
    Ok(false)
}

impl BQForm {
    fn mul_disc_square_class(&self, other: &BQForm) -> Result<bool> {
        Ok(self.disc().mul(&other.disc()).sqrt_in_field().is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfield::FieldSpec;

    fn f(delta: u64) -> FieldSpec {
        FieldSpec::new(delta).unwrap()
    }

    fn q(spec: FieldSpec, a: i64, b: i64) -> QuadElem {
        QuadElem::new(spec, BigInt::from(a), BigInt::from(b)).unwrap()
    }

    fn form(spec: FieldSpec, coeffs: [(i64, i64); 3]) -> BQForm {
        BQForm::new(
            q(spec, coeffs[0].0, coeffs[0].1),
            q(spec, coeffs[1].0, coeffs[1].1),
            q(spec, coeffs[2].0, coeffs[2].1),
        )
        .unwrap()
    }

    #[test]
    fn act_identity_and_swap() {
        let s = f(2);
        let w = form(s, [(1, 0), (1, 0), (0, -1)]);
        let id = GammaElem::identity(s);
        assert_eq!(act(&w, &QuadElem::one(s), &id), w);
        let sw = GammaElem::new(
            QuadElem::zero(s),
            QuadElem::one(s).neg(),
            QuadElem::one(s),
            QuadElem::zero(s),
        )
        .unwrap();
        let got = act(&w, &QuadElem::one(s), &sw);
        assert_eq!(got.a, w.c);
        assert_eq!(got.b, w.b.neg());
        assert_eq!(got.c, w.a);
    }

    #[test]
    fn disc_scales_and_invariants_preserved() {
        let s = f(2);
        let w = form(s, [(1, 0), (1, 1), (1, 0)]);
        let t = q(s, 1, 1);
        let g = GammaElem::new(q(s, 1, 0), q(s, 2, 1), q(s, 0, 0), q(s, 1, 0)).unwrap();
        let w2 = act(&w, &t, &g);
        assert_eq!(w2.disc(), t.mul(&t).mul(&w.disc()));
        assert!(same_class_invariants(&w, &w2).unwrap());
    }

    #[test]
    fn canonical_rep_idempotent_and_orbit_stable() {
        let s = f(2);
        let w = form(s, [(1, 0), (1, 1), (1, 0)]);
        let (r1, ok1) = canonical_rep(&w, 200).unwrap();
        assert!(ok1);
        let (r2, _) = canonical_rep(&r1, 200).unwrap();
        assert_eq!(r1, r2);
        let sw = GammaElem::new(
            QuadElem::zero(s),
            QuadElem::one(s).neg(),
            QuadElem::one(s),
            QuadElem::zero(s),
        )
        .unwrap();
        let (r3, _) = canonical_rep(&act(&w, &QuadElem::one(s), &sw), 200).unwrap();
        assert_eq!(r1, r3);
    }

    #[test]
    fn random_words_reach_same_rep() {
        let s = f(2);
        let w = form(s, [(1, 0), (1, 1), (1, 0)]);
        let moves = move_set(s).unwrap();
        let (base, _) = canonical_rep(&w, 400).unwrap();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let mut agree = 0;
        let trials = 60;
        for _ in 0..trials {
            let mut cur = w.clone();
            for _ in 0..5 {
                let (t, g) = &moves[(next() % moves.len() as u64) as usize];
                cur = act(&cur, t, g);
            }
            let (r, _) = canonical_rep(&cur, 400).unwrap();
            if r == base {
                agree += 1;
            } else {
                // fall back to ball intersection
                let (ball_a, _) = orbit_ball(&r, 12, 4000).unwrap();
                if ball_a.contains(&base) {
                    agree += 1;
                }
            }
        }
        assert!(agree >= trials - 1, "only {agree}/{trials} descents merged");
    }

    #[test]
    fn automorph_fixes_form() {
        let s = f(2);
        let w = form(s, [(1, 0), (1, 1), (1, 0)]);
        let md = mixed_disc_of(&w).unwrap();
        let e = crate::relorder::solve_pell(&md, 200.0).expect("unit");
        let g = automorph(&w, &e.t, &e.u).unwrap();
        assert_eq!(act(&w, &QuadElem::one(s), &g), w);
        // trace is t up to the projective sign
        assert!(g.trace() == e.t || g.trace() == e.t.neg());
        let trivial = automorph(&w, &QuadElem::from_int(s, 2), &QuadFrac::zero(s)).unwrap();
        assert_eq!(trivial, GammaElem::identity(s));
    }

    #[test]
    fn automorph_homomorphism() {
        let s = f(2);
        let w = form(s, [(1, 0), (1, 1), (1, 0)]);
        let md = mixed_disc_of(&w).unwrap();
        let e = crate::relorder::solve_pell(&md, 200.0).unwrap();
        let (t2, u2) = crate::relorder::unit_power(&e, 2);
        let g1 = automorph(&w, &e.t, &e.u).unwrap();
        let g2 = automorph(&w, &t2, &u2).unwrap();
        assert_eq!(g1.mul(&g1), g2);
    }

    #[test]
    fn class_count_finds_witness() {
        let s = f(2);
        let w = form(s, [(1, 0), (1, 1), (1, 0)]);
        let md = mixed_disc_of(&w).unwrap();
        let cc = class_count(&md, 6, 20000).unwrap();
        assert!(cc.h >= 1);
        assert!(cc.certified);
    }
}
