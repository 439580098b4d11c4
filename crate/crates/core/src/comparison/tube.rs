//! Volume of tubes around a closed Reeb orbit.
//!
//! Jacobian route: `V(C, T) = len(C)·|S^{2n−1}|·⟨∫₀^{min(T, r(v))} ρ_v(t) dt⟩_v`,
//! where `ρ_v` is the Jacobian of `(s, t, θ) ↦ ψ(Φ_s x, t v(θ))` and `r(v)` the
//! first time the geodesic stops minimizing. The Reeb flow is an isometry on
//! K-contact manifolds, so one base point on `C` stands for the whole orbit.
//!
//! Monte-Carlo route (dimension 3): the fraction of uniform points within
//! distance `T` of the orbit, times the total volume.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesics::{first_return, horizontal_basis, OrbitDistance};
use crate::identities::hypothesis_margins;
use crate::manifolds::Manifold;
use crate::numerics::{find_root, mean_and_stderr, rng_for, sphere_sample, stable_sum, Vector};
use crate::riccati::{det_bbar, ModelParams, OrbitJacobiFlow};

use super::MARGIN_SAMPLES;

/// Relative accuracy floor of the integrated Jacobi fields.
const ODE_FLOOR: f64 = 1e-9;
/// A geodesic is non-minimizing once the orbit distance of its end point
/// falls this far below its length.
const MINIMIZING_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct TubeConfig {
    /// Radii `T`, positive and increasing.
    pub t_grid: Vec<f64>,
    /// Initial directions on `S^{2n−1}` (equispaced on the circle for `n = 1`).
    pub angular: usize,
    /// Uniform points for the Monte-Carlo route (dimension 3 only; 0 skips it).
    pub mc_samples: usize,
    /// Quadrature pieces over `[0, max T]`.
    pub pieces: usize,
    /// Coarse minimizing checks per geodesic (dimension 3 only).
    pub cutoff_checks: usize,
    pub seed: u64,
}

impl TubeConfig {
    /// `points` radii equally spaced on `[t_min, t_max]`.
    pub fn uniform(t_min: f64, t_max: f64, points: usize, seed: u64) -> Self {
        let t_grid = if points <= 1 {
            vec![t_max]
        } else {
            (0..points)
                .map(|i| t_min + (t_max - t_min) * i as f64 / (points - 1) as f64)
                .collect()
        };
        Self {
            t_grid,
            angular: 32,
            mc_samples: 2000,
            pieces: 64,
            cutoff_checks: 6,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TubeVolumeReport {
    pub manifold: String,
    pub t_grid: Vec<f64>,
    pub volume: Vec<f64>,
    pub volume_err: Vec<f64>,
    pub model_volume: Vec<f64>,
    pub ratio: Vec<f64>,
    pub ratio_err: Vec<f64>,
    pub mc_volume: Option<Vec<f64>>,
    pub mc_err: Option<Vec<f64>>,
    /// Points where the orbit distance could not be resolved (counted as outside).
    pub mc_unresolved: usize,
    /// `|V − V_MC| / √(σ² + σ_MC²)` per radius.
    pub route_z: Option<Vec<f64>>,
    pub routes_agree: Option<bool>,
    pub monotone: bool,
    pub orbit_length: f64,
    pub cover_orbit_length: f64,
    pub detected_m: Option<u32>,
    pub k1: f64,
    /// Smallest and largest cut-off `r(v)` over the sampled directions.
    pub cutoff_range: (f64, f64),
    pub seed: u64,
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];
const GL3: [(f64, f64); 3] = [
    (0.0, 0.888_888_888_888_888_9),
    (-0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
    (0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
];

/// Cumulative Gauss–Legendre integrals of `f` at each breakpoint (sorted,
/// starting after 0), each gap split into pieces of length `≤ h`. Returns
/// `(integrals, error estimates)`; the error is the 5- vs 3-point gap.
fn cumulative_gl<F: Fn(f64) -> f64>(f: F, breaks: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let mut acc = Vec::new();
    let mut err = Vec::new();
    let (mut lo, mut total, mut total_err) = (0.0, 0.0, 0.0);
    for &hi in breaks {
        if hi > lo {
            let pieces = ((hi - lo) / h).ceil().max(1.0) as usize;
            let w = (hi - lo) / pieces as f64;
            for p in 0..pieces {
                let (a, b) = (lo + w * p as f64, lo + w * (p + 1) as f64);
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                let i5 = half * stable_sum(GL5.iter().map(|(x, wt)| wt * f(mid + half * x)));
                let i3 = half * stable_sum(GL3.iter().map(|(x, wt)| wt * f(mid + half * x)));
                total += i5;
                total_err += (i5 - i3).abs();
            }
            lo = hi;
        }
        acc.push(total);
        err.push(total_err);
    }
    (acc, err)
}

fn sphere_area(dim: usize) -> f64 {
    // |S^{2n−1}| = 2πⁿ/(n−1)!.
    let n = dim.div_ceil(2);
    let fact: f64 = (1..n).map(|i| i as f64).product();
    2.0 * PI.powi(n as i32) / fact
}

/// Integrals over each radius of one direction, truncated at the cut-off.
struct DirectionIntegral {
    cutoff: f64,
    integral: Vec<f64>,
    error: Vec<f64>,
}

/// First sign change of `det D` on `[0, t_max]`.
fn conjugate_time(flow: &OrbitJacobiFlow, t_max: f64, cells: usize) -> Option<f64> {
    let det = |t: f64| flow.sample(t).d.determinant();
    let h = t_max / cells as f64;
    let mut prev = det(0.5 * h);
    for i in 1..=cells {
        let t = i as f64 * h;
        let cur = det(t);
        if cur == 0.0 {
            return Some(t);
        }
        if cur.signum() != prev.signum() {
            let lo = if i == 1 { 0.5 * h } else { t - h };
            return find_root(det, lo, t, 1e-13).ok();
        }
        prev = cur;
    }
    None
}

/// First time the geodesic stops realizing the distance to the orbit.
fn minimizing_cutoff(flow: &OrbitJacobiFlow, od: &OrbitDistance, t_max: f64, checks: usize) -> Option<f64> {
    let shorter = |t: f64| {
        od.distance(&flow.sample(t).position)
            .is_some_and(|f| f.distance < t - MINIMIZING_SLACK)
    };
    let mut lo = 0.0;
    for j in 1..=checks {
        let t = t_max * j as f64 / checks as f64;
        if shorter(t) {
            let mut hi = t;
            for _ in 0..12 {
                let mid = 0.5 * (lo + hi);
                if shorter(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        lo = t;
    }
    None
}

fn direction_integral(
    m: &Manifold,
    x: &Vector,
    v: &Vector,
    cfg: &TubeConfig,
    od: Option<&OrbitDistance>,
) -> Result<DirectionIntegral> {
    let t_max = *cfg.t_grid.last().expect("non-empty grid");
    let flow = OrbitJacobiFlow::new(m, x, v, t_max)?;
    let mut cutoff = conjugate_time(&flow, t_max, cfg.pieces.max(8)).unwrap_or(f64::INFINITY);
    if let Some(od) = od {
        let cap = cutoff.min(t_max);
        if let Some(r) = minimizing_cutoff(&flow, od, cap, cfg.cutoff_checks) {
            cutoff = cutoff.min(r);
        }
    }
    let mut breaks: Vec<f64> = cfg.t_grid.iter().map(|&t| t.min(cutoff)).collect();
    breaks.dedup_by(|a, b| a == b);
    let h = t_max / cfg.pieces.max(1) as f64;
    let (acc, err) = cumulative_gl(|t| flow.sample(t).density, &breaks, h);
    let lookup = |t: f64| {
        let te = t.min(cutoff);
        let i = breaks.iter().position(|&b| b == te).expect("breakpoint");
        (acc[i], err[i])
    };
    let (integral, error) = cfg.t_grid.iter().map(|&t| lookup(t)).unzip();
    Ok(DirectionIntegral { cutoff, integral, error })
}

/// `V̄(T) = (4π/k₁²)|S^{2n−1}|∫₀^{min(T, π/k₁)} t^{2n−1} det B̄(t) dt`.
fn model_volume(k1: f64, n: usize, t_grid: &[f64], pieces: usize) -> Result<Vec<f64>> {
    let p = ModelParams::matched(k1, 0.0, n)?;
    let focal = PI / k1;
    let t_max = *t_grid.last().expect("non-empty grid");
    let mut breaks: Vec<f64> = t_grid.iter().map(|&t| t.min(focal)).collect();
    breaks.dedup_by(|a, b| a == b);
    let (acc, _) = cumulative_gl(|t| t.powi(2 * n as i32 - 1) * det_bbar(&p, t), &breaks, t_max / pieces as f64);
    let scale = 4.0 * PI / (k1 * k1) * sphere_area(2 * n - 1);
    Ok(t_grid
        .iter()
        .map(|&t| {
            let i = breaks.iter().position(|&b| b == t.min(focal)).expect("breakpoint");
            scale * acc[i]
        })
        .collect())
}

/// Tube volumes around the Reeb orbit through the base point, by the
/// Jacobian route and (in dimension 3) the Monte-Carlo oracle, with the
/// model profile, the ratio, its monotonicity and the detected covering
/// order `len(C̄)/len(C)`.
pub fn tube_volume(m: &Manifold, cfg: &TubeConfig) -> Result<TubeVolumeReport> {
    if !m.is_contact() {
        return Err(Error::NotApplicable(format!("{m} has no Reeb orbits")));
    }
    if cfg.t_grid.is_empty() || cfg.t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter("tube radii must be positive".into()));
    }
    if cfg.t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("tube radii must be increasing".into()));
    }
    if cfg.angular == 0 || cfg.pieces == 0 {
        return Err(Error::InvalidParameter("angular samples and pieces must be positive".into()));
    }
    let n = m.n();
    let x = m.origin();
    let orbit_length = first_return(m, &x, true)?;
    let cover_orbit_length = first_return(m, &x, false)?;
    let q = cover_orbit_length / orbit_length;
    let detected_m = ((q - q.round()).abs() < 1e-6).then(|| q.round() as u32);

    let margins = hypothesis_margins(m, 0.0, 0.0, MARGIN_SAMPLES, cfg.seed);
    if margins.holomorphic_min <= 1e-9 {
        return Err(Error::NotApplicable(format!("{m} has no positive holomorphic curvature bound")));
    }
    let k1 = margins.holomorphic_min.sqrt();
    let t_max = *cfg.t_grid.last().expect("non-empty grid");

    let od = if n == 1 {
        Some(OrbitDistance::new(m, &x, 1.05 * t_max.max(PI / k1), 48, 48, 48)?)
    } else {
        None
    };

    // Jacobian route.
    let basis = horizontal_basis(m, &x);
    let dirs = sphere_sample(2 * n - 1, cfg.angular, cfg.seed, n == 1).map_err(Error::from)?;
    let dirs: Vec<Vector> = dirs
        .iter()
        .map(|d| basis.iter().zip(d).fold(Vector::zeros(x.len()), |acc, (b, c)| acc + b * *c))
        .collect();
    let per_dir: Vec<DirectionIntegral> = dirs
        .par_iter()
        .map(|v| direction_integral(m, &x, v, cfg, od.as_ref()))
        .collect::<Result<_>>()?;
    let scale = orbit_length * sphere_area(2 * n - 1);
    let mut volume = Vec::new();
    let mut volume_err = Vec::new();
    for i in 0..cfg.t_grid.len() {
        let vals: Vec<f64> = per_dir.iter().map(|d| d.integral[i]).collect();
        let (mean, se) = mean_and_stderr(&vals);
        let quad = stable_sum(per_dir.iter().map(|d| d.error[i])) / per_dir.len() as f64;
        let v = scale * mean;
        volume.push(v);
        volume_err.push(scale * (se * se + quad * quad).sqrt() + ODE_FLOOR * v.abs());
    }
    let model = model_volume(k1, n, &cfg.t_grid, cfg.pieces)?;
    let ratio: Vec<f64> = volume.iter().zip(&model).map(|(v, b)| v / b).collect();
    let ratio_err: Vec<f64> = volume_err.iter().zip(&model).map(|(e, b)| e / b).collect();
    let monotone = (1..ratio.len()).all(|i| ratio[i] <= ratio[i - 1] + 2.0 * ratio_err[i].max(ratio_err[i - 1]));
    let cutoffs: Vec<f64> = per_dir.iter().map(|d| d.cutoff.min(t_max)).collect();
    let cutoff_range = (
        cutoffs.iter().cloned().fold(f64::INFINITY, f64::min),
        cutoffs.iter().cloned().fold(0.0, f64::max),
    );

    // Monte-Carlo route.
    let (mut mc_volume, mut mc_err, mut route_z, mut routes_agree, mut mc_unresolved) = (None, None, None, None, 0);
    if let (Some(od), true) = (od.as_ref(), cfg.mc_samples > 0) {
        let total = m
            .volume()
            .ok_or_else(|| Error::NotApplicable(format!("{m} has infinite volume")))?;
        let dists: Vec<Option<f64>> = (0..cfg.mc_samples)
            .into_par_iter()
            .map(|i| {
                let y = m.sample_point(&mut rng_for(cfg.seed, 1_000_000 + i as u64));
                od.distance(&y).map(|f| f.distance)
            })
            .collect();
        mc_unresolved = dists.iter().filter(|d| d.is_none()).count();
        let nn = cfg.mc_samples as f64;
        let (mut vols, mut errs, mut zs) = (Vec::new(), Vec::new(), Vec::new());
        for (i, &t) in cfg.t_grid.iter().enumerate() {
            let hits = dists.iter().filter(|d| d.is_some_and(|d| d < t)).count() as f64;
            let p = hits / nn;
            let v = total * p;
            let e = total * (p * (1.0 - p) / nn).sqrt().max(1.0 / nn);
            zs.push((volume[i] - v).abs() / (volume_err[i].powi(2) + e * e).sqrt());
            vols.push(v);
            errs.push(e);
        }
        routes_agree = Some(zs.iter().all(|&z| z <= 3.0));
        mc_volume = Some(vols);
        mc_err = Some(errs);
        route_z = Some(zs);
    }

    Ok(TubeVolumeReport {
        manifold: m.to_string(),
        t_grid: cfg.t_grid.clone(),
        volume,
        volume_err,
        model_volume: model,
        ratio,
        ratio_err,
        mc_volume,
        mc_err,
        mc_unresolved,
        route_z,
        routes_agree,
        monotone,
        orbit_length,
        cover_orbit_length,
        detected_m,
        k1,
        cutoff_range,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (acc, _) = cumulative_gl(|t| t.powi(9), &[0.5, 1.0, 2.0], 0.3);
        let (_, err) = cumulative_gl(|t| t.powi(5), &[0.5, 1.0, 2.0], 0.3);
        for (i, b) in [0.5f64, 1.0, 2.0].iter().enumerate() {
            assert!((acc[i] - b.powi(10) / 10.0).abs() < 1e-12);
            assert!(err[i] < 1e-13);
        }
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-14);
    }

    #[test]
    fn model_volume_of_the_round_sphere() {
        // k = 1, n = 1: the tube of radius π is the whole S³(2), volume 16π².
        let v = model_volume(1.0, 1, &[PI], 64).unwrap();
        assert!((v[0] - 16.0 * PI * PI).abs() < 1e-9, "{}", v[0]);
    }
}
