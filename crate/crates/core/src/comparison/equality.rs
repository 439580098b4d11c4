//! Structure of the focal set `X = {exp_x(T v) : v ∈ ker η, |v| = 1}`,
//! `T = π/k₁`, in the equality case.
//!
//! At `T` the Jacobi field rotating `v` towards `Jv` collapses onto `ξ`, so
//! `TX` is spanned by `J₁` (moving `x` along the orbit) and `J₃ …`. With the
//! geodesic velocity `ν` as unit normal, `⟨∇_{Jₐ}ν, J_b⟩ = ⟨DJₐ/dt, J_b⟩`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesics::{first_return, horizontal_basis, integrate_geodesic_with, reeb_flow, GeodesicOptions};
use crate::manifolds::Manifold;
use crate::numerics::ode::OdeOptions;
use crate::numerics::{gram_schmidt, minimize_scalar, sphere_sample, Mat, NumericsError, Vector};
use crate::riccati::OrbitJacobiFlow;

/// Two focal points closer than this (ambient, modulo deck) coincide.
pub const HIT_RADIUS: f64 = 1e-5;
/// A near miss below this but above [`HIT_RADIUS`] makes the count ambiguous.
const AMBIGUOUS_RADIUS: f64 = 1e-3;
/// Cells of the focal circle `θ ↦ exp_x(T(cos θ v + sin θ Jv))`.
const TURN_CELLS: usize = 64;

/// Which value of the focal-circle rotation speed the measurement supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateReading {
    /// `c = k₁/2`.
    HalfK1,
    /// `c = k₁²/2`.
    HalfK1Squared,
    /// Both (only at `k₁ = 1`).
    Both,
    Neither,
}

#[derive(Debug, Clone, Serialize)]
pub struct EqualityDiagnostics {
    pub manifold: String,
    pub k1: f64,
    pub t_focal: f64,
    pub seed: u64,
    pub focal_points: Vec<Vec<f64>>,
    /// `max |⟨Jᵢ(T), Jγ̇⟩|`: the collapsed column of `D(T)`.
    pub collapse_residual: f64,
    /// Largest second-fundamental-form entry of `X` in an orthonormal basis.
    pub shape_norm: f64,
    /// Distance of `ξ` from `TX`.
    pub xi_tangency: f64,
    /// Largest distance of `J(TX)` from `TX`.
    pub j_invariance: f64,
    /// Largest distance of the focal circle from the Reeb orbit through its
    /// start point.
    pub circle_residual: f64,
    /// Reeb time consumed by one turn of the focal circle.
    pub reeb_time_per_turn: f64,
    /// `4π/k₁²`.
    pub reeb_period: f64,
    /// Angular speed of the arriving normal relative to the Reeb-transported
    /// one, per unit Reeb time.
    pub rotation_rate: f64,
    /// Deviation of the rotation angle from linear growth.
    pub rotation_spread: f64,
    /// `2π / rotation_rate`.
    pub rotation_period: f64,
    pub rate_reading: RateReading,
    /// Number of turn parameters in `[0, 2π)` landing on the start point in
    /// the quotient; `None` when a near miss makes the count ambiguous.
    pub multiplicity: Option<u32>,
}

fn fast_opts() -> GeodesicOptions {
    GeodesicOptions {
        ode: OdeOptions::with_tolerances(1e-12, 1e-13).sparse(),
        with_frame: false,
    }
}

/// Per-sample residuals `(collapse, shape, ξ-tangency, J-invariance)`.
fn focal_residuals(m: &Manifold, x: &Vector, v: &Vector, t: f64) -> Result<(Vector, [f64; 4])> {
    let flow = OrbitJacobiFlow::new(m, x, v, t)?;
    let s = flow.sample(t);
    let y = &s.position;
    let ip = |a: &Vector, b: &Vector| m.metric(y, a, b);
    let k = s.fields.len();
    let collapse = (0..k).map(|r| s.d[(r, 1)].abs()).fold(0.0, f64::max);

    let tx: Vec<usize> = std::iter::once(0).chain(2..k).collect();
    let r = tx.len();
    let gram = Mat::from_fn(r, r, |i, j| ip(&s.fields[tx[i]], &s.fields[tx[j]]));
    let c = Mat::from_fn(r, r, |i, j| ip(&s.cov[tx[i]], &s.fields[tx[j]]));
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerics(NumericsError::NoConvergence("focal tangent vectors are degenerate".into())))?;
    let li = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Numerics(NumericsError::NoConvergence("focal tangent vectors are degenerate".into())))?;
    let ii = &li * c * li.transpose();
    let mut shape = ii.amax();
    if k > 2 {
        shape = shape.max(s.d_dot.view((2, 2), (k - 2, k - 2)).amax());
    }

    let basis = gram_schmidt(&tx.iter().map(|&i| s.fields[i].clone()).collect::<Vec<_>>(), ip);
    let residual = |w: &Vector| {
        let p = basis.iter().fold(Vector::zeros(w.len()), |acc, b| acc + b * ip(w, b));
        m.norm(y, &(w - p))
    };
    let xi = residual(&m.xi(y));
    let jinv = basis.iter().map(|b| residual(&m.j(y, b))).fold(0.0, f64::max);
    Ok((y.clone(), [collapse, shape, xi, jinv]))
}

/// `dΦ_s(w)` at `p` by central differences (exact for linear flows).
fn flow_push(m: &Manifold, p: &Vector, w: &Vector, s: f64) -> Result<Vector> {
    let e = 1e-4;
    Ok((reeb_flow(m, &(p + w * e), s)? - reeb_flow(m, &(p - w * e), s)?) / (2.0 * e))
}

/// Reeb parameter in `[0, period)` carrying `y0` closest to `y`.
fn reeb_parameter(m: &Manifold, y0: &Vector, y: &Vector, period: f64) -> (f64, f64) {
    let gap = |s: f64| reeb_flow(m, y0, s).map_or(f64::INFINITY, |q| (q - y).norm());
    let cells = 256;
    let h = period / cells as f64;
    let best = (0..cells)
        .min_by(|&a, &b| gap(a as f64 * h).total_cmp(&gap(b as f64 * h)))
        .unwrap_or(0);
    let (s, g) = minimize_scalar(gap, (best as f64 - 1.0) * h, (best as f64 + 1.0) * h, 1e-14);
    (s.rem_euclid(period), g)
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Focal-set diagnostics at `T = π/k₁` from the base point: collapse of
/// `D(T)`, second fundamental form, `ξ`-tangency and `J`-invariance at
/// `samples` seeded focal points, then the rotation speed and covering
/// multiplicity along one focal circle.
pub fn equality_diagnostics(m: &Manifold, k1: f64, samples: usize, seed: u64) -> Result<EqualityDiagnostics> {
    if !m.is_contact() {
        return Err(Error::NotApplicable(format!("{m} has no focal circles of a Reeb orbit")));
    }
    if !(k1 > 0.0 && k1.is_finite()) {
        return Err(Error::InvalidParameter(format!("k1 must be positive, got {k1}")));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one focal sample".into()));
    }
    let n = m.n();
    let t = PI / k1;
    let x = m.origin();
    let basis = horizontal_basis(m, &x);
    let dirs: Vec<Vector> = sphere_sample(2 * n - 1, samples, seed, false)?
        .iter()
        .map(|d| basis.iter().zip(d).fold(Vector::zeros(x.len()), |acc, (b, c)| acc + b * *c))
        .collect();
    let focal: Vec<(Vector, [f64; 4])> = dirs
        .par_iter()
        .map(|v| focal_residuals(m, &x, v, t))
        .collect::<Result<_>>()?;
    let worst = |i: usize| focal.iter().map(|f| f.1[i]).fold(0.0, f64::max);

    // One focal circle θ ↦ exp_x(T w(θ)).
    let v0 = &dirs[0];
    let jv0 = m.j(&x, v0);
    let end = |th: f64| -> Result<(Vector, Vector)> {
        let w = v0 * th.cos() + &jv0 * th.sin();
        let e = integrate_geodesic_with(m, &x, &w, 0.0, t, &fast_opts())?.end();
        Ok((e.position, e.velocity))
    };
    let thetas: Vec<f64> = (0..=TURN_CELLS).map(|i| 2.0 * PI * i as f64 / TURN_CELLS as f64).collect();
    let ends: Vec<(Vector, Vector)> = thetas.par_iter().map(|&th| end(th)).collect::<Result<_>>()?;
    let (y0, nu0) = ends[0].clone();
    let period = first_return(m, &y0, false)?;

    let mut s_unwrapped = vec![0.0];
    let mut phi_unwrapped = vec![0.0];
    let mut circle_residual: f64 = 0.0;
    for (y, nu) in &ends[1..] {
        let (s, g) = reeb_parameter(m, &y0, y, period);
        circle_residual = circle_residual.max(g);
        let prev = *s_unwrapped.last().expect("seeded");
        let s = s + period * ((prev - s) / period).round();
        let reference = m.tangent_project(y, &flow_push(m, &y0, &nu0, s)?);
        let jr = m.j(y, &reference);
        let phi = m.metric(y, nu, &jr).atan2(m.metric(y, nu, &reference));
        let prev_phi = *phi_unwrapped.last().expect("seeded");
        let phi = phi + 2.0 * PI * ((prev_phi - phi) / (2.0 * PI)).round();
        s_unwrapped.push(s);
        phi_unwrapped.push(phi);
    }
    let reeb_time_per_turn = (s_unwrapped[TURN_CELLS] - s_unwrapped[0]).abs();
    let slope = least_squares_slope(&s_unwrapped, &phi_unwrapped);
    let rotation_spread = s_unwrapped
        .iter()
        .zip(&phi_unwrapped)
        .map(|(s, p)| (p - slope * s).abs())
        .fold(0.0, f64::max);
    let rotation_rate = slope.abs();
    let close = |c: f64| (rotation_rate - c).abs() <= 1e-4 * c;
    let rate_reading = match (close(0.5 * k1), close(0.5 * k1 * k1)) {
        (true, true) => RateReading::Both,
        (true, false) => RateReading::HalfK1,
        (false, true) => RateReading::HalfK1Squared,
        (false, false) => RateReading::Neither,
    };

    // Covering multiplicity: returns of the focal circle to y₀ in the quotient.
    let gap = |th: f64| end(th).map_or(f64::INFINITY, |(y, _)| m.quotient_gap(&y, &y0));
    let gaps: Vec<f64> = ends.iter().map(|(y, _)| m.quotient_gap(y, &y0)).collect();
    let mut hits = 0u32;
    let mut ambiguous = false;
    for i in 1..TURN_CELLS {
        if gaps[i] <= gaps[i - 1] && gaps[i] <= gaps[i + 1] {
            let (_, g) = minimize_scalar(gap, thetas[i - 1], thetas[i + 1], 1e-12);
            if g < HIT_RADIUS {
                hits += 1;
            } else if g < AMBIGUOUS_RADIUS {
                ambiguous = true;
            }
        }
    }
    let multiplicity = (!ambiguous).then_some(1 + hits);

    Ok(EqualityDiagnostics {
        manifold: m.to_string(),
        k1,
        t_focal: t,
        seed,
        focal_points: focal.iter().map(|f| f.0.as_slice().to_vec()).collect(),
        collapse_residual: worst(0),
        shape_norm: worst(1),
        xi_tangency: worst(2),
        j_invariance: worst(3),
        circle_residual,
        reeb_time_per_turn,
        reeb_period: 4.0 * PI / (k1 * k1),
        rotation_rate,
        rotation_spread,
        rotation_period: 2.0 * PI / rotation_rate,
        rate_reading,
        multiplicity,
    })
}
