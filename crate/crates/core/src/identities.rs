//! Executable contact-metric identities and curvature-hypothesis margins.
//!
//! Every identity is written as a residual `|lhs − rhs|` (metric norm for
//! vectors) and evaluated at seeded random tuples: a point, unit tangent
//! vectors `u, v, w` and unit horizontal vectors `X, Y, Z`. `h` is always
//! the finite-difference `L_ξ J`, never the closed form, and Tanaka–Webster
//! curvature is taken from nested finite differences of the connection so it
//! is independent of the closed form used elsewhere.
//!
//! Identity `Rm.2` is checked in the form
//! `⟨(∇_v J)v, ξ⟩ = ½⟨v, v + hv⟩ − ½⟨ξ, v⟩²`, which is what `Rm.1` gives
//! for `u = ξ, w = v`; the version with a full `⟨ξ, v⟩²` only holds for
//! horizontal `v`.

use rayon::prelude::*;
use serde::Serialize;

use crate::manifolds::{Connection, Manifold};
use crate::numerics::{rng_for, sampling::gaussian_vec, SeededRng, Vector};

/// Tolerance for single-layer finite-difference identities.
pub const FD_TOL: f64 = 1e-5;
/// Tolerance where two finite-difference layers stack.
pub const FD2_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct IdentityResult {
    pub id: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub manifold: String,
    pub seed: u64,
    pub results: Vec<IdentityResult>,
    /// Set when the suite does not apply (no contact structure).
    pub not_applicable: Option<String>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn get(&self, id: &str) -> Option<&IdentityResult> {
        self.results.iter().find(|r| r.id == id)
    }
}

/// One random evaluation point.
pub struct Sample {
    pub p: Vector,
    pub u: Vector,
    pub v: Vector,
    pub w: Vector,
    pub x: Vector,
    pub y: Vector,
    pub z: Vector,
}

fn unit_tangent(m: &Manifold, p: &Vector, rng: &mut SeededRng) -> Vector {
    loop {
        let g = Vector::from_vec(gaussian_vec(rng, m.ambient_dim()));
        let t = m.tangent_project(p, &g);
        let n = m.norm(p, &t);
        if n > 1e-6 {
            return t / n;
        }
    }
}

fn unit_horizontal(m: &Manifold, p: &Vector, rng: &mut SeededRng) -> Vector {
    loop {
        let t = unit_tangent(m, p, rng);
        let h = m.horizontal(p, &t);
        let n = m.norm(p, &h);
        if n > 1e-6 {
            return h / n;
        }
    }
}

impl Sample {
    pub fn draw(m: &Manifold, seed: u64, index: u64) -> Self {
        let mut rng = rng_for(seed, index);
        let p = m.sample_point(&mut rng);
        let u = unit_tangent(m, &p, &mut rng);
        let v = unit_tangent(m, &p, &mut rng);
        let w = unit_tangent(m, &p, &mut rng);
        let (x, y, z) = if m.is_contact() {
            (
                unit_horizontal(m, &p, &mut rng),
                unit_horizontal(m, &p, &mut rng),
                unit_horizontal(m, &p, &mut rng),
            )
        } else {
            (u.clone(), v.clone(), w.clone())
        };
        Self { p, u, v, w, x, y, z }
    }
}

type Check = fn(&Manifold, &Sample) -> f64;

/// Identifier, tolerance and residual of every identity.
pub fn catalogue() -> Vec<(&'static str, f64, Check)> {
    vec![
        ("J.1", FD_TOL, j1 as Check),
        ("J.2", FD2_TOL, j2),
        ("J.3", FD_TOL, j3),
        ("J.4", FD2_TOL, j4),
        ("J.5", FD_TOL, j5),
        ("h.1", FD_TOL, h1),
        ("h.2", FD_TOL, h2),
        ("h.3", FD_TOL, h3),
        ("h.4", FD_TOL, h4),
        ("h.5", FD_TOL, h5),
        ("h.6", FD_TOL, h6),
        ("h.7", FD2_TOL, h7),
        ("h.8", FD_TOL, h8),
        ("h.9", FD_TOL, h9),
        ("Rm.1", FD_TOL, rm1),
        ("Rm.2", FD_TOL, rm2),
        ("Rm.3", FD2_TOL, rm3),
        ("Rm.4", FD_TOL, rm4),
        ("bRm.1", FD_TOL, brm1),
        ("bRm.2", FD_TOL, brm2),
        ("bRm.3", FD_TOL, brm3),
        ("bRm.4", FD2_TOL, brm4),
        ("bRm.5", FD2_TOL, brm5),
        ("bRm.6", FD2_TOL, brm6),
        ("Ricci.1", FD2_TOL, ricci1),
        ("Ricci.2", FD2_TOL, ricci2),
        ("Ricci.3", FD2_TOL, ricci3),
        ("CR", FD_TOL, cr),
    ]
}

fn vnorm(m: &Manifold, s: &Sample, v: &Vector) -> f64 {
    m.norm(&s.p, v)
}

fn g(m: &Manifold, s: &Sample, a: &Vector, b: &Vector) -> f64 {
    m.metric(&s.p, a, b)
}

fn jx(m: &Manifold, s: &Sample, a: &Vector) -> Vector {
    m.j(&s.p, a)
}

fn hx(m: &Manifold, s: &Sample, a: &Vector) -> Vector {
    m.lie_h(&s.p, a)
}

fn nj(m: &Manifold, s: &Sample, a: &Vector, b: &Vector) -> Vector {
    m.nabla_j(&s.p, a, b)
}

fn eta(m: &Manifold, s: &Sample, a: &Vector) -> f64 {
    m.eta(&s.p, a)
}

fn xi(m: &Manifold, s: &Sample) -> Vector {
    m.xi(&s.p)
}

fn rm(m: &Manifold, s: &Sample, a: &Vector, b: &Vector, c: &Vector) -> Vector {
    m.riemann(&s.p, a, b, c)
}

fn j1(m: &Manifold, s: &Sample) -> f64 {
    let x = xi(m, s);
    vnorm(m, s, &m.nabla_xi(&s.p, &x))
}

fn j2(m: &Manifold, s: &Sample) -> f64 {
    let (v, w) = (&s.v, &s.w);
    let lhs = m.nijenhuis(&s.p, v, w);
    let rhs = nj(m, s, &jx(m, s, v), w) - nj(m, s, &jx(m, s, w), v) + jx(m, s, &nj(m, s, w, v))
        - jx(m, s, &nj(m, s, v, w));
    vnorm(m, s, &(lhs - rhs))
}

fn j3(m: &Manifold, s: &Sample) -> f64 {
    let (u, v, w) = (&s.u, &s.v, &s.w);
    (g(m, s, &nj(m, s, u, w), v) + g(m, s, &nj(m, s, v, u), w) + g(m, s, &nj(m, s, w, v), u)).abs()
}

fn j4(m: &Manifold, s: &Sample) -> f64 {
    let (u, v, w) = (&s.u, &s.v, &s.w);
    let lhs = 2.0 * g(m, s, &nj(m, s, u, v), w);
    let rhs = g(m, s, &m.nijenhuis(&s.p, v, w), &jx(m, s, u))
        + m.d_eta(&s.p, &jx(m, s, v), u) * eta(m, s, w)
        - m.d_eta(&s.p, &jx(m, s, w), u) * eta(m, s, v);
    (lhs - rhs).abs()
}

fn j5(m: &Manifold, s: &Sample) -> f64 {
    vnorm(m, s, &nj(m, s, &xi(m, s), &s.v))
}

fn h1(m: &Manifold, s: &Sample) -> f64 {
    let (u, v) = (&s.u, &s.v);
    let ju = |q: &Vector| m.j(q, &m.tangent_project(q, u));
    let jv = |q: &Vector| m.j(q, &m.tangent_project(q, v));
    (m.lie_eta(&s.p, &ju, v) - m.lie_eta(&s.p, &jv, u)).abs()
}

fn h2(m: &Manifold, s: &Sample) -> f64 {
    vnorm(m, s, &hx(m, s, &xi(m, s)))
}

fn h3(m: &Manifold, s: &Sample) -> f64 {
    (g(m, s, &hx(m, s, &s.u), &s.v) - g(m, s, &hx(m, s, &s.v), &s.u)).abs()
}

fn h4(m: &Manifold, s: &Sample) -> f64 {
    let u = &s.u;
    let rhs = (jx(m, s, u) + jx(m, s, &hx(m, s, u))) * -0.5;
    vnorm(m, s, &(m.nabla_xi(&s.p, u) - rhs))
}

fn h5(m: &Manifold, s: &Sample) -> f64 {
    let v = &s.v;
    vnorm(m, s, &(jx(m, s, &hx(m, s, v)) + hx(m, s, &jx(m, s, v))))
}

fn h6(m: &Manifold, s: &Sample) -> f64 {
    m.tangent_basis(&s.p)
        .iter()
        .map(|e| g(m, s, &hx(m, s, e), e))
        .sum::<f64>()
        .abs()
}

fn h7(m: &Manifold, s: &Sample) -> f64 {
    let (u, x) = (&s.u, xi(m, s));
    let lhs = jx(m, s, &rm(m, s, &x, u, &x));
    let ju = jx(m, s, u);
    let rhs = m.nabla_h(&s.p, &x, u) * 0.5 - &ju * 0.25 + hx(m, s, &hx(m, s, &ju)) * 0.25;
    vnorm(m, s, &(lhs - rhs))
}

fn h8(m: &Manifold, s: &Sample) -> f64 {
    let (u, x) = (&s.u, xi(m, s));
    let lhs = rm(m, s, &x, u, &x) - jx(m, s, &rm(m, s, &x, &jx(m, s, u), &x));
    let rhs = jx(m, s, &jx(m, s, u)) * 0.5 + hx(m, s, &hx(m, s, u)) * 0.5;
    vnorm(m, s, &(lhs - rhs))
}

fn trace_h2(m: &Manifold, s: &Sample) -> f64 {
    m.tangent_basis(&s.p)
        .iter()
        .map(|e| g(m, s, &hx(m, s, &hx(m, s, e)), e))
        .sum()
}

fn h9(m: &Manifold, s: &Sample) -> f64 {
    let x = xi(m, s);
    (m.ricci(&s.p, &x, &x) - m.n() as f64 / 2.0 + 0.25 * trace_h2(m, s)).abs()
}

fn rm1(m: &Manifold, s: &Sample) -> f64 {
    let (u, v, w) = (&s.u, &s.v, &s.w);
    let lhs = 2.0 * g(m, s, &nj(m, s, v, w), u) + 2.0 * g(m, s, &nj(m, s, &jx(m, s, v), w), &jx(m, s, u));
    let vhv = v + hx(m, s, v);
    let rhs = eta(m, s, u) * g(m, s, w, &vhv) - 2.0 * eta(m, s, w) * g(m, s, u, v)
        + eta(m, s, u) * eta(m, s, v) * eta(m, s, w);
    (lhs - rhs).abs()
}

fn rm2(m: &Manifold, s: &Sample) -> f64 {
    let v = &s.v;
    let x = xi(m, s);
    let lhs = g(m, s, &nj(m, s, v, v), &x);
    let e = g(m, s, &x, v);
    let rhs = 0.5 * g(m, s, v, &(v + hx(m, s, v))) - 0.5 * e * e;
    (lhs - rhs).abs()
}

fn rm3(m: &Manifold, s: &Sample) -> f64 {
    let (u, v) = (&s.u, &s.v);
    let lhs = rm(m, s, v, u, &xi(m, s));
    let rhs = (nj(m, s, v, u) + m.nabla_jh(&s.p, v, u)) * -0.5 + (nj(m, s, u, v) + m.nabla_jh(&s.p, u, v)) * 0.5;
    vnorm(m, s, &(lhs - rhs))
}

fn rm4(m: &Manifold, s: &Sample) -> f64 {
    let (u, v, w) = (&s.u, &s.v, &s.w);
    let x = xi(m, s);
    let (ju, jv, jw) = (jx(m, s, u), jx(m, s, v), jx(m, s, w));
    let lhs = g(m, s, &rm(m, s, &x, w, v), u) - g(m, s, &rm(m, s, &x, w, &jv), &ju)
        + g(m, s, &rm(m, s, &x, &jw, &jv), u)
        + g(m, s, &rm(m, s, &x, &jw, v), &ju);
    let hw = hx(m, s, w);
    let whw = w + &hw;
    let rhs = 0.5 * eta(m, s, u) * g(m, s, v, &whw) - 0.5 * eta(m, s, v) * g(m, s, u, &whw)
        + g(m, s, &nj(m, s, &hw, u), v);
    (lhs - rhs).abs()
}

fn torsion(m: &Manifold, s: &Sample, a: &Vector, b: &Vector) -> Vector {
    m.tanaka_torsion(&s.p, a, b)
}

fn brm1(m: &Manifold, s: &Sample) -> f64 {
    let (u, v) = (&s.u, &s.v);
    let rhs = jx(m, s, &hx(m, s, u)) * (0.5 * eta(m, s, v)) - jx(m, s, &hx(m, s, v)) * (0.5 * eta(m, s, u))
        + xi(m, s) * g(m, s, u, &jx(m, s, v));
    vnorm(m, s, &(torsion(m, s, u, v) - rhs))
}

fn brm2(m: &Manifold, s: &Sample) -> f64 {
    let x = xi(m, s);
    let v = &s.v;
    let lhs = torsion(m, s, &x, &jx(m, s, v));
    vnorm(m, s, &(lhs + jx(m, s, &torsion(m, s, &x, v))))
}

fn brm3(m: &Manifold, s: &Sample) -> f64 {
    let (x, y) = (&s.x, &s.y);
    let t = torsion(m, s, x, y);
    let a = vnorm(m, s, &(&t - xi(m, s) * g(m, s, x, &jx(m, s, y))));
    let b = vnorm(m, s, &(&t - xi(m, s) * m.d_eta(&s.p, x, y)));
    a.max(b)
}

fn tw_fd(m: &Manifold, s: &Sample, a: &Vector, b: &Vector, c: &Vector) -> Vector {
    m.fd_curvature(Connection::Tanaka, &s.p, a, b, c)
}

fn brm4(m: &Manifold, s: &Sample) -> f64 {
    vnorm(m, s, &tw_fd(m, s, &s.u, &s.v, &xi(m, s)))
}

fn brm5(m: &Manifold, s: &Sample) -> f64 {
    let (x, y, z) = (&s.x, &s.y, &s.z);
    let jhx = jx(m, s, x) + jx(m, s, &hx(m, s, x));
    let jhy = jx(m, s, y) + jx(m, s, &hx(m, s, y));
    let rhs = m.horizontal(&s.p, &rm(m, s, x, y, z)) + &jhx * (0.25 * g(m, s, &jhy, z))
        - &jhy * (0.25 * g(m, s, &jhx, z))
        + jx(m, s, z) * (0.5 * g(m, s, x, &jx(m, s, y)));
    vnorm(m, s, &(tw_fd(m, s, x, y, z) - rhs))
}

fn brm6(m: &Manifold, s: &Sample) -> f64 {
    let (x, z) = (&s.x, &s.z);
    let e = xi(m, s);
    let rhs = m.horizontal(&s.p, &(rm(m, s, x, &e, z) + nj(m, s, x, z) * 0.5));
    vnorm(m, s, &(tw_fd(m, s, x, &e, z) - rhs))
}

/// `R̄c(a, b) = Σᵢ ⟨R̄m(eᵢ, a)b, eᵢ⟩` from finite-difference curvature.
fn tw_ricci(m: &Manifold, s: &Sample, a: &Vector, b: &Vector) -> f64 {
    m.tangent_basis(&s.p)
        .iter()
        .map(|e| g(m, s, &tw_fd(m, s, e, a, b), e))
        .sum()
}

fn ricci1(m: &Manifold, s: &Sample) -> f64 {
    let y = &s.y;
    let x = xi(m, s);
    let bar = tw_ricci(m, s, &x, y);
    let rc = m.ricci(&s.p, &x, y);
    let div = -0.5 * g(m, s, &m.div_h(&s.p), &jx(m, s, y));
    (bar - rc).abs().max((rc - div).abs())
}

fn ricci2(m: &Manifold, s: &Sample) -> f64 {
    let y = &s.y;
    let x = xi(m, s);
    let hy = hx(m, s, y);
    let rhs = m.ricci(&s.p, y, y) - g(m, s, &rm(m, s, &x, y, y), &x) - 0.25 * g(m, s, &hy, &hy)
        + 0.75 * g(m, s, y, y);
    (tw_ricci(m, s, y, y) - rhs).abs()
}

fn horizontal_basis(m: &Manifold, s: &Sample) -> Vec<Vector> {
    let cands: Vec<Vector> = m.tangent_basis(&s.p).iter().map(|e| m.horizontal(&s.p, e)).collect();
    crate::numerics::gram_schmidt(&cands, |a, b| g(m, s, a, b))
}

fn ricci3(m: &Manifold, s: &Sample) -> f64 {
    let (y, z) = (&s.y, &s.z);
    let sum: f64 = horizontal_basis(m, s)
        .iter()
        .map(|e| g(m, s, &rm(m, s, e, y, z), e))
        .sum();
    let rhs = sum + 0.75 * g(m, s, y, z) - 0.25 * g(m, s, &hx(m, s, y), &hx(m, s, z));
    (tw_ricci(m, s, y, z) - rhs).abs()
}

fn cr_at(m: &Manifold, s: &Sample, u: &Vector, v: &Vector) -> f64 {
    let uhu = u + hx(m, s, u);
    let rhs = xi(m, s) * (0.5 * g(m, s, &uhu, v)) - &uhu * (0.5 * g(m, s, &xi(m, s), v));
    vnorm(m, s, &(nj(m, s, u, v) - rhs))
}

fn cr(m: &Manifold, s: &Sample) -> f64 {
    cr_at(m, s, &s.u, &s.v)
}

/// Run the selected identities (ids or id prefixes such as `"bRm"`; empty
/// selects everything) at `samples` seeded tuples.
pub fn run_identity_suite(m: &Manifold, selection: &[String], samples: usize, seed: u64) -> IdentityReport {
    let mut report = IdentityReport {
        manifold: m.to_string(),
        seed,
        results: Vec::new(),
        not_applicable: None,
    };
    if !m.is_contact() {
        report.not_applicable = Some(format!("{m} carries no contact metric structure"));
        return report;
    }
    let chosen: Vec<(&str, f64, Check)> = catalogue()
        .into_iter()
        .filter(|(id, _, _)| selection.is_empty() || selection.iter().any(|s| matches_selection(id, s)))
        .collect();
    let residuals: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = Sample::draw(m, seed, i);
            chosen.iter().map(|(_, _, f)| f(m, &s)).collect()
        })
        .collect();
    for (k, (id, tol, _)) in chosen.iter().enumerate() {
        let max = residuals.iter().map(|r| r[k]).fold(0.0, nan_max);
        report.results.push(IdentityResult {
            id: id.to_string(),
            samples,
            max_residual: max,
            tolerance: *tol,
            pass: max <= *tol,
        });
    }
    report
}

fn matches_selection(id: &str, sel: &str) -> bool {
    id.eq_ignore_ascii_case(sel)
        || id
            .split('.')
            .next()
            .is_some_and(|family| family.eq_ignore_ascii_case(sel))
}

/// `max` that propagates NaN (a NaN residual must fail).
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Largest CR residual `|(∇_u J)v − ½⟨u+hu, v⟩ξ + ½⟨ξ, v⟩(u+hu)|`.
pub fn cr_residual(m: &Manifold, samples: usize, seed: u64) -> Option<f64> {
    if !m.is_contact() {
        return None;
    }
    Some(
        (0..samples as u64)
            .into_par_iter()
            .map(|i| cr(m, &Sample::draw(m, seed, i)))
            .collect::<Vec<_>>()
            .into_iter()
            .fold(0.0, nan_max),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisMargins {
    pub k1: f64,
    pub k2: f64,
    /// `inf ⟨R̄m(JX,X)X,JX⟩ − |N(X)|² − k₁²`.
    pub margin1: f64,
    /// `inf tr_{{X,JX}^⊥}⟨R̄m(·,X)X,·⟩ − |N(X)|² − k₂²` (absent for `n = 1`).
    pub margin2: Option<f64>,
    /// Smallest holomorphic term (the largest admissible `k₁²`).
    pub holomorphic_min: f64,
    /// Smallest trace term (the largest admissible `k₂²`).
    pub trace_min: Option<f64>,
    pub n_max: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Curvature-hypothesis margins over seeded unit horizontal `X` (unit
/// tangent on `CP^n`, with Riemannian curvature there).
pub fn hypothesis_margins(m: &Manifold, k1: f64, k2: f64, samples: usize, seed: u64) -> HypothesisMargins {
    let rows: Vec<(f64, Option<f64>, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = Sample::draw(m, seed, i);
            let p = &s.p;
            let x = &s.x;
            let jxv = m.j(p, x);
            let curv = |a: &Vector, b: &Vector, c: &Vector| {
                if m.is_contact() {
                    m.tanaka_webster(p, a, b, c)
                } else {
                    m.riemann(p, a, b, c)
                }
            };
            let nx = m.n_tensor(p, x);
            let n2 = m.metric(p, &nx, &nx);
            let hol = m.metric(p, &curv(&jxv, x, x), &jxv) - n2;
            let mut cands = vec![x.clone(), jxv.clone()];
            cands.extend(horizontal_basis(m, &s));
            let basis = crate::numerics::gram_schmidt(&cands, |a, b| m.metric(p, a, b));
            let tr = (basis.len() > 2).then(|| {
                basis[2..]
                    .iter()
                    .map(|y| m.metric(p, &curv(y, x, x), y))
                    .sum::<f64>()
                    - n2
            });
            (hol, tr, n2.sqrt())
        })
        .collect();
    let hol_min = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let trace_min = rows
        .iter()
        .map(|r| r.1)
        .try_fold(f64::INFINITY, |acc, t| t.map(|t| acc.min(t)));
    let n_max = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    HypothesisMargins {
        k1,
        k2,
        margin1: hol_min - k1 * k1,
        margin2: trace_min.map(|t| t - k2 * k2),
        holomorphic_min: hol_min,
        trace_min,
        n_max,
        samples,
        seed,
    }
}
