//! Sub-Riemannian geodesics, the adapted frame along them, the Reeb flow and
//! shooting for Carnot–Carathéodory distances.
//!
//! A normal geodesic with unit horizontal speed satisfies
//! `D²γ = a Jγ̇ − ½⟨hγ̇, Jγ̇⟩ ξ` and `ȧ = ½⟨hγ̇, Jγ̇⟩`, where
//! `a = −⟨∇g, ξ⟩`. On `CP^n` the same code integrates ordinary Riemannian
//! geodesics (`a` is absent).
//!
//! Frames are indexed `v₀ … v_{2n}` with `v₀ = ξ`, `v₁ = γ̇`, `v₂ = Jγ̇`
//! (on `CP^n` there is no `v₀`). Only `v₃ …` are integrated; the first three
//! are read off the geodesic state. The frame ODE is
//! `Dvᵢ/dt = −Σ_{j≤2} ⟨vᵢ, Dvⱼ/dt⟩ vⱼ`, which keeps the frame orthonormal and
//! makes the frame transport matrix `W` skew with the block
//! structure `W₁`, `W₂`.

mod jacobi;
mod reeb;
mod shooting;

pub use jacobi::{JacobiRecord, Variation};
pub use reeb::{first_return, reeb_flow, reeb_returns, OrbitReturn};
pub use shooting::{cc_distance, horizontal_basis, OrbitDistance, OrbitFoot, ShootConfig, ShootResult};

use crate::error::{Error, Result};
use crate::manifolds::Manifold;
use crate::numerics::{self, integrate, Mat, OdeOptions, OdeSolution, OdeStatus, Vector};

/// Tolerance on the unit-speed / horizontality preconditions.
pub const STATE_TOL: f64 = 1e-8;
/// Accepted steps between frame re-orthonormalisations.
pub const SEGMENT_STEPS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicState {
    pub t: f64,
    pub position: Vector,
    pub velocity: Vector,
    pub a: f64,
}

/// Adapted orthonormal frame at one time. `vectors[0]` is `v₀ = ξ` on
/// contact manifolds and `v₁ = γ̇` on `CP^n`; `offset` is the index of the
/// first stored vector.
#[derive(Debug, Clone)]
pub struct Frame {
    pub t: f64,
    pub offset: usize,
    pub vectors: Vec<Vector>,
}

impl Frame {
    /// Frame vector with index `i` (`0 ≤ i ≤ 2n`).
    pub fn v(&self, i: usize) -> &Vector {
        &self.vectors[i - self.offset]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct GeodesicOptions {
    pub ode: OdeOptions,
    pub with_frame: bool,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions::with_tolerances(1e-12, 1e-13),
            with_frame: false,
        }
    }
}

impl GeodesicOptions {
    pub fn with_frame() -> Self {
        Self {
            with_frame: true,
            ..Self::default()
        }
    }
}

/// Dense record of a geodesic (and optionally its frame) on `[0, t_max]`.
#[derive(Debug, Clone)]
pub struct GeodesicRecord {
    manifold: Manifold,
    pub start: GeodesicState,
    pub t_max: f64,
    frame_len: usize,
    framed: bool,
    segments: Vec<OdeSolution>,
    /// Largest frame Gram-matrix defect seen before a re-orthonormalisation.
    pub max_frame_drift: f64,
    pub reorthonormalisations: usize,
    /// Reference frame `v̄₃ …` at `t = 0` (the initial integrated vectors).
    initial_frame: Vec<Vector>,
}

fn unpack(y: &[f64], n: usize) -> (Vector, Vector, f64) {
    (
        Vector::from_column_slice(&y[..n]),
        Vector::from_column_slice(&y[n..2 * n]),
        y[2 * n],
    )
}

/// Covariant acceleration `a Jγ̇ − ½⟨hγ̇, Jγ̇⟩ ξ` and `ȧ`.
fn geodesic_acceleration(m: &Manifold, p: &Vector, v: &Vector, a: f64) -> (Vector, f64) {
    if !m.is_contact() {
        return (Vector::zeros(p.len()), 0.0);
    }
    let jv = m.j(p, v);
    let hjv = m.metric(p, &m.h(p, v), &jv);
    (&jv * a - m.xi(p) * (0.5 * hjv), 0.5 * hjv)
}

/// Right-hand side for the geodesic state `[γ, γ̇, a]` followed by
/// `frame_len` integrated frame vectors.
fn geodesic_rhs(m: &Manifold, frame_len: usize, y: &[f64], out: &mut [f64]) {
    let n = m.ambient_dim();
    let (p, v, a) = unpack(y, n);
    let (acc, adot) = geodesic_acceleration(m, &p, &v, a);
    let pdd = m.ambient_rate(&p, &v, &v, &acc);
    out[..n].copy_from_slice(v.as_slice());
    out[n..2 * n].copy_from_slice(pdd.as_slice());
    out[2 * n] = adot;
    if frame_len == 0 {
        return;
    }
    let (heads, rates) = head_frame_rates(m, &p, &v, &acc);
    for i in 0..frame_len {
        let off = 2 * n + 1 + i * n;
        let vi = Vector::from_column_slice(&y[off..off + n]);
        let mut cov = Vector::zeros(n);
        for (vj, dj) in heads.iter().zip(rates.iter()) {
            cov -= vj * m.metric(&p, &vi, dj);
        }
        let rate = m.ambient_rate(&p, &v, &vi, &cov);
        out[off..off + n].copy_from_slice(rate.as_slice());
    }
}

/// The leading frame vectors (`ξ, γ̇, Jγ̇`, or `γ̇, Jγ̇`) and their covariant
/// rates along the geodesic.
fn head_frame_rates(m: &Manifold, p: &Vector, v: &Vector, acc: &Vector) -> (Vec<Vector>, Vec<Vector>) {
    let jv = m.j(p, v);
    let d2 = m.nabla_j(p, v, v) + m.j(p, acc);
    if m.is_contact() {
        let d0 = -(&jv + m.j(p, &m.h(p, v))) * 0.5;
        (vec![m.xi(p), v.clone(), jv], vec![d0, acc.clone(), d2])
    } else {
        (vec![v.clone(), jv], vec![acc.clone(), d2])
    }
}

impl GeodesicRecord {
    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    /// Whether the record was integrated with its adapted frame.
    pub fn has_frame(&self) -> bool {
        self.framed
    }

    /// Accepted integrator times (strictly increasing).
    pub fn times(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for seg in &self.segments {
            for &t in &seg.times {
                if out.last().is_none_or(|&l| t > l) {
                    out.push(t);
                }
            }
        }
        if out.is_empty() {
            out.push(0.0);
        }
        out
    }

    fn raw(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(0.0, self.t_max);
        for seg in &self.segments {
            if t == seg.t_last() {
                return seg.y_last().to_vec();
            }
            if t < seg.t_last() {
                return seg.eval(t);
            }
        }
        match self.segments.last() {
            Some(seg) => seg.y_last().to_vec(),
            None => self.pack_start(),
        }
    }

    fn pack_start(&self) -> Vec<f64> {
        let mut y = Vec::new();
        y.extend_from_slice(self.start.position.as_slice());
        y.extend_from_slice(self.start.velocity.as_slice());
        y.push(self.start.a);
        for v in &self.initial_frame {
            y.extend_from_slice(v.as_slice());
        }
        y
    }

    /// Geodesic state at time `t ∈ [0, t_max]`.
    pub fn state(&self, t: f64) -> GeodesicState {
        let y = self.raw(t);
        let (p, v, a) = unpack(&y, self.manifold.ambient_dim());
        GeodesicState {
            t,
            position: p,
            velocity: v,
            a,
        }
    }

    pub fn end(&self) -> GeodesicState {
        self.state(self.t_max)
    }

    /// States on the accepted-step grid.
    pub fn samples(&self) -> Vec<GeodesicState> {
        self.times().into_iter().map(|t| self.state(t)).collect()
    }

    /// The full adapted frame at `t`.
    pub fn frame(&self, t: f64) -> Frame {
        let m = &self.manifold;
        let n = m.ambient_dim();
        let y = self.raw(t);
        let (p, v, _) = unpack(&y, n);
        let jv = m.j(&p, &v);
        let mut vectors = if m.is_contact() {
            vec![m.xi(&p), v, jv]
        } else {
            vec![v, jv]
        };
        for i in 0..self.frame_len {
            let off = 2 * n + 1 + i * n;
            vectors.push(Vector::from_column_slice(&y[off..off + n]));
        }
        Frame {
            t,
            offset: if m.is_contact() { 0 } else { 1 },
            vectors,
        }
    }

    /// Largest entry of `G − I` for the frame Gram matrix at `t`.
    pub fn frame_defect(&self, t: f64) -> f64 {
        let f = self.frame(t);
        let p = self.state(t).position;
        let g = self.manifold.gram(&p, &f.vectors);
        (g - Mat::identity(f.len(), f.len())).amax()
    }

    /// Transport matrix `W_ij = ⟨Dvᵢ/dt, v_j⟩` assembled from the closed
    /// block formulas: `W₁` from `a` and `H`, `W₂` from `H`
    /// and `N`, zero lower-right block.
    pub fn transport_matrix(&self, t: f64) -> Mat {
        let m = &self.manifold;
        let st = self.state(t);
        let fr = self.frame(t);
        let p = &st.position;
        let d = fr.len();
        let (acc, _) = geodesic_acceleration(m, p, &st.velocity, st.a);
        let (_, rates) = head_frame_rates(m, p, &st.velocity, &acc);
        let heads = rates.len();
        let mut w = Mat::zeros(d, d);
        for (r, rate) in rates.iter().enumerate() {
            for c in 0..d {
                w[(r, c)] = m.metric(p, rate, &fr.vectors[c]);
            }
        }
        for r in heads..d {
            for c in 0..heads {
                w[(r, c)] = -w[(c, r)];
            }
        }
        w
    }

    /// Transport matrix measured from the recorded frame by central
    /// differences in `t` (an independent check of [`Self::transport_matrix`]).
    pub fn transport_matrix_fd(&self, t: f64) -> Mat {
        let m = &self.manifold;
        let h = 1e-5;
        let st = self.state(t);
        let p = &st.position;
        let f0 = self.frame(t);
        let fp = self.frame(t + h);
        let fm = self.frame(t - h);
        let d = f0.len();
        let mut w = Mat::zeros(d, d);
        for i in 0..d {
            let vdot = (&fp.vectors[i] - &fm.vectors[i]) / (2.0 * h);
            let cov = m.tangent_project(p, &vdot) + m.christoffel(p, &st.velocity, &f0.vectors[i]);
            for j in 0..d {
                w[(i, j)] = m.metric(p, &cov, &f0.vectors[j]);
            }
        }
        w
    }

    /// `H_ij = ⟨h vᵢ, v_j⟩` over the full frame (finite-difference `h`).
    pub fn h_matrix(&self, t: f64) -> Mat {
        let m = &self.manifold;
        let p = self.state(t).position;
        let fr = self.frame(t);
        let d = fr.len();
        if !m.is_contact() {
            return Mat::zeros(d, d);
        }
        let hv: Vec<Vector> = fr.vectors.iter().map(|v| m.lie_h(&p, v)).collect();
        Mat::from_fn(d, d, |i, j| m.metric(&p, &hv[i], &fr.vectors[j]))
    }

    /// `Nᵢ = ⟨(∇_γ̇ J)γ̇, vᵢ⟩` for `i ≥ 3`.
    pub fn n_vector(&self, t: f64) -> Vector {
        let m = &self.manifold;
        let st = self.state(t);
        let fr = self.frame(t);
        let nv = m.nabla_j(&st.position, &st.velocity, &st.velocity);
        let rest: Vec<f64> = (3..3 + self.frame_len)
            .map(|i| m.metric(&st.position, &nv, fr.v(i)))
            .collect();
        Vector::from_vec(rest)
    }

    /// `U_ij = ⟨vᵢ(t), v̄_j(t)⟩`, `i, j ≥ 3`, where `v̄(t)` is the
    /// Gram–Schmidt orthonormalisation of the initial vectors projected onto
    /// `{v₀, v₁, v₂}^⊥` at `γ(t)`. Orthogonal whenever the frame is.
    pub fn u_matrix(&self, t: f64) -> Mat {
        let m = &self.manifold;
        let p = self.state(t).position;
        let fr = self.frame(t);
        let heads = fr.len() - self.frame_len;
        let ip = |a: &Vector, b: &Vector| m.metric(&p, a, b);
        let mut cands: Vec<Vector> = fr.vectors[..heads].to_vec();
        for v in &self.initial_frame {
            let mut w = m.tangent_project(&p, v);
            for h in &fr.vectors[..heads] {
                w -= h * ip(&w, h);
            }
            cands.push(w);
        }
        let basis = numerics::gram_schmidt(&cands, ip);
        let k = self.frame_len;
        Mat::from_fn(k, k, |i, j| {
            basis
                .get(heads + j)
                .map_or(0.0, |b| ip(&fr.vectors[heads + i], b))
        })
    }
}

/// Validate and normalise a start state.
fn check_start(m: &Manifold, p: &Vector, v: &Vector, a: f64) -> Result<()> {
    let n = m.ambient_dim();
    if p.len() != n || v.len() != n {
        return Err(Error::InvalidParameter(format!(
            "expected ambient dimension {n}, got point {} / velocity {}",
            p.len(),
            v.len()
        )));
    }
    if m.constraint_residual(p) > 1e-9 {
        return Err(Error::InvalidParameter("start point is off the manifold".into()));
    }
    if (m.tangent_project(p, v) - v).amax() > STATE_TOL {
        return Err(Error::InvalidParameter("velocity is not tangent".into()));
    }
    if m.is_contact() && m.eta(p, v).abs() > STATE_TOL {
        return Err(Error::InvalidParameter("velocity is not horizontal".into()));
    }
    if (m.norm(p, v) - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidParameter("velocity must have unit length".into()));
    }
    if !m.is_contact() && a != 0.0 {
        return Err(Error::InvalidParameter("a is only defined on contact manifolds".into()));
    }
    if !a.is_finite() {
        return Err(Error::InvalidParameter("a must be finite".into()));
    }
    Ok(())
}

/// Initial integrated frame vectors `v₃ …`: an orthonormal basis of
/// `{ξ, γ̇, Jγ̇}^⊥` built from the tangent basis.
pub fn initial_frame(m: &Manifold, p: &Vector, v: &Vector) -> Vec<Vector> {
    let jv = m.j(p, v);
    let mut cands = if m.is_contact() {
        vec![m.xi(p), v.clone(), jv]
    } else {
        vec![v.clone(), jv]
    };
    let heads = cands.len();
    cands.extend(m.tangent_basis(p));
    let basis = numerics::gram_schmidt(&cands, |a, b| m.metric(p, a, b));
    basis[heads..].to_vec()
}

/// Integrate the geodesic from `(p, v, a)` on `[0, t_max]`.
pub fn integrate_geodesic(m: &Manifold, p: &Vector, v: &Vector, a: f64, t_max: f64) -> Result<GeodesicRecord> {
    integrate_geodesic_with(m, p, v, a, t_max, &GeodesicOptions::default())
}

/// Integrate the geodesic together with the adapted frame.
pub fn transport_frame(record: &GeodesicRecord) -> Result<GeodesicRecord> {
    if record.framed {
        return Ok(record.clone());
    }
    let s = &record.start;
    integrate_geodesic_with(
        &record.manifold,
        &s.position,
        &s.velocity,
        s.a,
        record.t_max,
        &GeodesicOptions::with_frame(),
    )
}

pub fn integrate_geodesic_with(
    m: &Manifold,
    p: &Vector,
    v: &Vector,
    a: f64,
    t_max: f64,
    opts: &GeodesicOptions,
) -> Result<GeodesicRecord> {
    check_start(m, p, v, a)?;
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_max must be ≥ 0, got {t_max}")));
    }
    let frame0 = if opts.with_frame { initial_frame(m, p, v) } else { Vec::new() };
    let frame_len = frame0.len();
    let mut rec = GeodesicRecord {
        manifold: m.clone(),
        start: GeodesicState {
            t: 0.0,
            position: p.clone(),
            velocity: v.clone(),
            a,
        },
        t_max,
        frame_len,
        framed: opts.with_frame,
        segments: Vec::new(),
        max_frame_drift: 0.0,
        reorthonormalisations: 0,
        initial_frame: frame0,
    };
    if t_max == 0.0 {
        return Ok(rec);
    }
    let mut y = rec.pack_start();
    let mut t = 0.0;
    let mut steps_left = opts.ode.max_steps;
    loop {
        let mut count = 0usize;
        let mut o = opts.ode.clone();
        o.max_steps = steps_left;
        let sol = integrate(
            |_, y, out| geodesic_rhs(m, frame_len, y, out),
            t,
            &y,
            t_max,
            &o,
            |_, _| {
                count += 1;
                frame_len > 0 && count >= SEGMENT_STEPS
            },
        )?;
        steps_left = steps_left.saturating_sub(sol.times.len());
        match sol.status {
            OdeStatus::Completed => {
                rec.segments.push(sol);
                break;
            }
            OdeStatus::StepUnderflow => {
                return Err(numerics::NumericsError::StepUnderflow { t_last: sol.t_last() }.into());
            }
            OdeStatus::Stopped => {
                t = sol.t_last();
                y = sol.y_last().to_vec();
                rec.segments.push(sol);
                let drift = reorthonormalise(m, frame_len, &mut y);
                rec.max_frame_drift = rec.max_frame_drift.max(drift);
                rec.reorthonormalisations += 1;
                if t >= t_max {
                    break;
                }
            }
        }
    }
    Ok(rec)
}

/// Pull the state back onto the manifold and re-orthonormalise the frame
/// (modified Gram–Schmidt, the head vectors held fixed). Returns the frame
/// defect before correction.
fn reorthonormalise(m: &Manifold, frame_len: usize, y: &mut [f64]) -> f64 {
    let n = m.ambient_dim();
    let (p, v, a) = unpack(y, n);
    let p = m.retract(&p);
    let mut v = m.tangent_project(&p, &v);
    if m.is_contact() {
        v = m.horizontal(&p, &v);
    }
    v /= m.norm(&p, &v);
    let jv = m.j(&p, &v);
    let mut heads = if m.is_contact() {
        vec![m.xi(&p), v.clone(), jv]
    } else {
        vec![v.clone(), jv]
    };
    let nh = heads.len();
    let old: Vec<Vector> = (0..frame_len)
        .map(|i| Vector::from_column_slice(&y[2 * n + 1 + i * n..2 * n + 1 + (i + 1) * n]))
        .collect();
    let mut all = heads.clone();
    all.extend(old.iter().cloned());
    let drift = (m.gram(&p, &all) - Mat::identity(all.len(), all.len())).amax();
    let ip = |a: &Vector, b: &Vector| m.metric(&p, a, b);
    for w in &old {
        let mut w = m.tangent_project(&p, w);
        for _ in 0..2 {
            for u in &heads {
                let c = ip(&w, u);
                w -= u * c;
            }
        }
        let nw = ip(&w, &w).sqrt();
        heads.push(w / nw);
    }
    y[..n].copy_from_slice(p.as_slice());
    y[n..2 * n].copy_from_slice(v.as_slice());
    y[2 * n] = a;
    for (i, w) in heads[nh..].iter().enumerate() {
        y[2 * n + 1 + i * n..2 * n + 1 + (i + 1) * n].copy_from_slice(w.as_slice());
    }
    drift
}
