//! Jacobi matrices of the normal exponential map of a Reeb orbit.
//!
//! Along `γ(t) = ψ(x, tv)` (`v ∈ ker η`, `a = 0`) the Jacobi fields are
//! `J₁` (move `x` along the orbit) and `Jᵢ`, `i ≥ 2` (rotate `v` towards
//! `eᵢ`, `Jᵢ(0) = 0`, `Jᵢ'(0) = eᵢ`). With the transported frame
//! `e = (ξ, Jγ̇, v₃ …)`, `D_ij = ⟨Jᵢ, e_j⟩`; `B` is `D` with rows `i ≥ 2`
//! divided by `t`, and `S = D⁻¹Ḋ + A`.

use super::{orbit_indices, select};
use crate::error::{Error, Result};
use crate::geodesics::{integrate_geodesic_with, reeb_flow, GeodesicOptions, GeodesicRecord, JacobiRecord, Variation};
use crate::manifolds::Manifold;
use crate::numerics::{Mat, Vector};

#[derive(Debug, Clone)]
pub struct OrbitJacobi {
    pub times: Vec<f64>,
    pub d: Vec<Mat>,
    pub d_dot: Vec<Mat>,
    pub b: Vec<Mat>,
    /// `D⁻¹Ḋ + A` (`None` where `D` is singular).
    pub s: Vec<Option<Mat>>,
    /// `√det Gram(J₁, γ̇, J₂, …)`: the Jacobian of `(s, t, θ) ↦ ψ(Φ_s x, tv(θ))`.
    pub density: Vec<f64>,
}

/// `d/ds dΦ_s(v)` at `s = 0`, by central differences of the flow.
fn reeb_velocity(m: &Manifold, x: &Vector, v: &Vector) -> Result<Vector> {
    let (h, e) = (1e-4, 1e-3);
    let f = |s: f64, sign: f64| reeb_flow(m, &(x + v * (sign * e)), s);
    Ok((f(h, 1.0)? - f(-h, 1.0)? - f(h, -1.0)? + f(-h, -1.0)?) / (4.0 * h * e))
}

/// One time slice of [`OrbitJacobiFlow`].
#[derive(Debug, Clone)]
pub struct OrbitJacobiSample {
    pub t: f64,
    pub position: Vector,
    pub velocity: Vector,
    /// Rows of the closed-orbit frame `ξ, Jγ̇, v₃ …` at `t`.
    pub frame: Vec<Vector>,
    /// `J₁, J₂, …` and their covariant derivatives `DJᵢ/dt`.
    pub fields: Vec<Vector>,
    pub cov: Vec<Vector>,
    pub d: Mat,
    pub d_dot: Mat,
    pub b: Mat,
    pub s: Option<Mat>,
    pub density: f64,
}

/// Framed geodesic plus its orbit Jacobi fields, evaluable at any
/// `t ∈ (0, t_max]`.
pub struct OrbitJacobiFlow {
    manifold: Manifold,
    record: GeodesicRecord,
    jac: JacobiRecord,
    idx: Vec<usize>,
}

impl OrbitJacobiFlow {
    /// Geodesic from `x` with horizontal unit initial velocity `v`.
    pub fn new(m: &Manifold, x: &Vector, v: &Vector, t_max: f64) -> Result<Self> {
        if !m.is_contact() {
            return Err(Error::NotApplicable(format!("{m} has no Reeb orbits")));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidParameter("sample times must be positive".into()));
        }
        let record = integrate_geodesic_with(m, x, v, 0.0, t_max, &GeodesicOptions::with_frame())?;
        let f0 = record.frame(0.0);
        let idx = orbit_indices(f0.len());
        let mut vars = vec![Variation::new(m.xi(x), reeb_velocity(m, x, v)?, 0.0)];
        for &i in &idx[1..] {
            vars.push(Variation::new(Vector::zeros(x.len()), f0.vectors[i].clone(), 0.0));
        }
        let jac = JacobiRecord::integrate(m, x, v, 0.0, &vars, t_max)?;
        Ok(Self { manifold: m.clone(), record, jac, idx })
    }

    pub fn t_max(&self) -> f64 {
        self.record.t_max
    }

    pub fn sample(&self, t: f64) -> OrbitJacobiSample {
        let m = &self.manifold;
        let idx = &self.idx;
        let k = idx.len();
        let (st, fields) = self.jac.at(t);
        let p = &st.position;
        let fr = self.record.frame(t);
        let w = self.record.transport_matrix(t);
        let ip = |a: &Vector, b: &Vector| m.metric(p, a, b);
        let cov: Vec<Vector> = fields
            .iter()
            .map(|(j, jd)| m.tangent_project(p, jd) + m.christoffel(p, &st.velocity, j))
            .collect();
        let d = Mat::from_fn(k, k, |r, c| ip(&fields[r].0, &fr.vectors[idx[c]]));
        let d_dot = Mat::from_fn(k, k, |r, c| {
            let j = &fields[r].0;
            let along: f64 = (0..fr.len()).map(|q| w[(idx[c], q)] * ip(j, &fr.vectors[q])).sum();
            ip(&cov[r], &fr.vectors[idx[c]]) + along
        });
        let mut b = d.clone();
        for r in 1..k {
            for c in 0..k {
                b[(r, c)] /= t;
            }
        }
        let a = select(&w, idx);
        let s = d.clone().try_inverse().map(|di| di * &d_dot + a);
        let mut span: Vec<Vector> = vec![fields[0].0.clone(), st.velocity.clone()];
        span.extend(fields[1..].iter().map(|f| f.0.clone()));
        let density = m.gram(p, &span).determinant().max(0.0).sqrt();
        OrbitJacobiSample {
            t,
            frame: idx.iter().map(|&i| fr.vectors[i].clone()).collect(),
            fields: fields.into_iter().map(|f| f.0).collect(),
            cov,
            d,
            d_dot,
            b,
            s,
            density,
            position: st.position,
            velocity: st.velocity,
        }
    }
}

/// Jacobi matrices along the geodesic from `x` with horizontal unit initial
/// velocity `v`, sampled at `times` (each in `(0, t_max]`).
pub fn orbit_jacobi(m: &Manifold, x: &Vector, v: &Vector, times: &[f64]) -> Result<OrbitJacobi> {
    if times.is_empty() || times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter("sample times must be positive".into()));
    }
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let flow = OrbitJacobiFlow::new(m, x, v, t_max)?;
    let mut out = OrbitJacobi {
        times: times.to_vec(),
        d: Vec::new(),
        d_dot: Vec::new(),
        b: Vec::new(),
        s: Vec::new(),
        density: Vec::new(),
    };
    for &t in times {
        let smp = flow.sample(t);
        out.d.push(smp.d);
        out.d_dot.push(smp.d_dot);
        out.b.push(smp.b);
        out.s.push(smp.s);
        out.density.push(smp.density);
    }
    Ok(out)
}
