//! Comparison theorems checked numerically: Riccati blow-up bounds on the
//! diameter, the symplectic analogue on `CP^n`, closed-orbit tube volumes
//! and the equality-case structure of the focal set.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesics::{cc_distance, horizontal_basis, integrate_geodesic_with, GeodesicOptions, ShootConfig};
use crate::identities::hypothesis_margins;
use crate::manifolds::Manifold;
use crate::numerics::sampling::gaussian_vec;
use crate::numerics::{rng_for, Vector};
use crate::riccati::{
    integrate_riccati_holomorphic, integrate_riccati_symplectic, integrate_riccati_trace, integrate_symplectic_block,
    integrate_symplectic_trace, SINGULAR_T0,
};

mod equality;
mod tube;

pub use equality::{equality_diagnostics, EqualityDiagnostics, RateReading};
pub use tube::{tube_volume, TubeConfig, TubeVolumeReport};

/// Samples used to measure the curvature constants.
pub const MARGIN_SAMPLES: usize = 200;
/// Integration horizon when the curvature hypothesis fails.
pub const NEGATIVE_HORIZON: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    /// `⟨R̄m(JX,X)X,JX⟩ − |N|² ≥ k₁²`, bound `2π/k₁`.
    Holomorphic,
    /// Transverse trace `≥ k₂²`, bound `√(2n−2)π/k₂`.
    Trace,
    /// Riemannian `CP^n`, bound `π/k₁`.
    Symplectic,
}

/// Blow-up times along one sampled geodesic.
#[derive(Debug, Clone, Serialize)]
pub struct BlowupSample {
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
    pub a: f64,
    /// The quantity the bound applies to (first conjugate time on `CP^n`).
    pub first: Option<f64>,
    pub block: Option<f64>,
    pub trace: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiameterEstimate {
    pub kind: EstimateKind,
    pub manifold: String,
    /// Whether the curvature hypothesis holds with a positive constant.
    pub applicable: bool,
    pub note: Option<String>,
    /// `k₁` (or `k₂` in trace mode), the square root of the measured infimum.
    pub k: f64,
    /// `k₂` for the symplectic trace block.
    pub k2: Option<f64>,
    pub bound: Option<f64>,
    pub trace_bound: Option<f64>,
    pub horizon: f64,
    pub samples: Vec<BlowupSample>,
    pub max_blowup: Option<f64>,
    pub min_blowup: Option<f64>,
    pub empirical_max_distance: Option<f64>,
    pub seed: u64,
}

impl DiameterEstimate {
    /// Every recorded time of the bounded quantity lies below the bound.
    pub fn within_bound(&self, tol: f64) -> bool {
        match self.bound {
            Some(b) => self.samples.iter().all(|s| s.first.is_some_and(|t| t <= b + tol)),
            None => false,
        }
    }

    /// No blow-up anywhere (the negative-control expectation).
    pub fn no_blowup(&self) -> bool {
        self.samples.iter().all(|s| s.first.is_none() && s.block.is_none() && s.trace.is_none())
    }
}

/// Unit horizontal vector from seeded Gaussian coefficients.
pub(crate) fn random_horizontal<R: Rng>(m: &Manifold, p: &Vector, rng: &mut R) -> Vector {
    let basis = horizontal_basis(m, p);
    let c = gaussian_vec(rng, basis.len());
    let v = basis.iter().zip(&c).fold(Vector::zeros(p.len()), |acc, (b, x)| acc + b * *x);
    let len = m.norm(p, &v);
    v / len
}

fn sqrt_positive(x: f64) -> Option<f64> {
    (x > 1e-9).then(|| x.sqrt())
}

fn extremes(samples: &[BlowupSample]) -> (Option<f64>, Option<f64>) {
    let ts: Vec<f64> = samples.iter().filter_map(|s| s.first).collect();
    if ts.is_empty() {
        return (None, None);
    }
    (Some(ts.iter().cloned().fold(f64::MIN, f64::max)), Some(ts.iter().cloned().fold(f64::MAX, f64::min)))
}

/// Largest `d_CC` over `pairs` seeded point pairs.
fn empirical_diameter(m: &Manifold, pairs: usize, seed: u64) -> Result<Option<f64>> {
    if pairs == 0 {
        return Ok(None);
    }
    let ds: Vec<f64> = (0..pairs)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = rng_for(seed, 10_000 + i as u64);
            let p = m.sample_point(&mut rng);
            let q = m.sample_point(&mut rng);
            Ok(cc_distance(m, &p, &q, &ShootConfig::default())?.distance)
        })
        .collect::<Result<_>>()?;
    Ok(Some(ds.into_iter().fold(0.0, f64::max)))
}

/// Riccati blow-up times along `samples` geodesics from seeded random points
/// of a contact manifold, compared with the diameter bound for the measured
/// curvature constant. Geodesic `i = 0` has `a = 0`; the others draw
/// `a ∈ [−k, k]`. When the hypothesis fails the estimate is marked not
/// applicable, `a = 0` throughout, and the Riccati equations are still run to
/// [`NEGATIVE_HORIZON`].
pub fn diameter_check(m: &Manifold, kind: EstimateKind, samples: usize, pairs: usize, seed: u64) -> Result<DiameterEstimate> {
    if !m.is_contact() {
        return Err(Error::NotApplicable(format!("{m} is not a contact manifold")));
    }
    let n = m.n();
    let margins = hypothesis_margins(m, 0.0, 0.0, MARGIN_SAMPLES, seed);
    let (k, bound) = match kind {
        EstimateKind::Holomorphic => {
            let k = sqrt_positive(margins.holomorphic_min);
            (k, k.map(|k| 2.0 * PI / k))
        }
        EstimateKind::Trace => {
            let tmin = margins
                .trace_min
                .ok_or_else(|| Error::NotApplicable("the trace hypothesis needs n ≥ 2".into()))?;
            let k = sqrt_positive(tmin);
            (k, k.map(|k| ((2 * n - 2) as f64).sqrt() * PI / k))
        }
        EstimateKind::Symplectic => {
            return Err(Error::InvalidParameter("use symplectic_conjugate_check on CP^n".into()));
        }
    };
    let applicable = k.is_some();
    let horizon = bound.map_or(NEGATIVE_HORIZON, |b| 1.1 * b + 0.5);
    let a_scale = k.unwrap_or(0.0);
    let runs: Vec<BlowupSample> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<BlowupSample> {
            let mut rng = rng_for(seed, 100 + i as u64);
            let p = m.sample_point(&mut rng);
            let v = random_horizontal(m, &p, &mut rng);
            let a = if i == 0 { 0.0 } else { rng.random_range(-a_scale..=a_scale) };
            let rec = integrate_geodesic_with(m, &p, &v, a, horizon, &GeodesicOptions::with_frame())?;
            let (block, trace) = match kind {
                EstimateKind::Holomorphic => (integrate_riccati_holomorphic(&rec, SINGULAR_T0, horizon)?.blowup_time, None),
                _ => (None, integrate_riccati_trace(&rec, SINGULAR_T0, horizon)?.blowup_time),
            };
            Ok(BlowupSample {
                point: p.as_slice().to_vec(),
                direction: v.as_slice().to_vec(),
                a,
                first: block.or(trace),
                block,
                trace,
            })
        })
        .collect::<Result<_>>()?;
    let (max_blowup, min_blowup) = extremes(&runs);
    let empirical_max_distance = if applicable { empirical_diameter(m, pairs, seed)? } else { None };
    Ok(DiameterEstimate {
        kind,
        manifold: m.to_string(),
        applicable,
        note: (!applicable).then(|| {
            format!(
                "curvature hypothesis fails: infimum {:.3e} is not positive",
                match kind {
                    EstimateKind::Holomorphic => margins.holomorphic_min,
                    _ => margins.trace_min.unwrap_or(0.0),
                }
            )
        }),
        k: k.unwrap_or(0.0),
        k2: None,
        bound,
        trace_bound: None,
        horizon,
        samples: runs,
        max_blowup,
        min_blowup,
        empirical_max_distance,
        seed,
    })
}

/// First conjugate times of Riemannian geodesics on `CP^n` from the
/// symplectic Riccati equation, with its `2×2` block and scalar trace run
/// separately. The bound is `π/k₁` for the measured holomorphic constant.
pub fn symplectic_conjugate_check(m: &Manifold, samples: usize, seed: u64) -> Result<DiameterEstimate> {
    if m.is_contact() {
        return Err(Error::NotApplicable(format!("{m} is not a base manifold")));
    }
    let n = m.n();
    let margins = hypothesis_margins(m, 0.0, 0.0, MARGIN_SAMPLES, seed);
    let k1 = sqrt_positive(margins.holomorphic_min);
    let k2 = margins.trace_min.and_then(sqrt_positive);
    let bound = k1.map(|k| PI / k);
    let trace_bound = k2.map(|k| ((2 * n - 2) as f64).sqrt() * PI / k);
    let horizon = bound.into_iter().chain(trace_bound).fold(0.0, f64::max);
    let horizon = if horizon > 0.0 { 1.05 * horizon + 0.2 } else { NEGATIVE_HORIZON };
    let runs: Vec<BlowupSample> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<BlowupSample> {
            let mut rng = rng_for(seed, 100 + i as u64);
            let p = m.sample_point(&mut rng);
            let v = random_horizontal(m, &p, &mut rng);
            let rec = integrate_geodesic_with(m, &p, &v, 0.0, horizon, &GeodesicOptions::with_frame())?;
            let first = integrate_riccati_symplectic(&rec, SINGULAR_T0, horizon)?.blowup_time;
            let block = integrate_symplectic_block(&rec, SINGULAR_T0, horizon)?.blowup_time;
            let trace = if n >= 2 {
                integrate_symplectic_trace(&rec, SINGULAR_T0, horizon)?.blowup_time
            } else {
                None
            };
            Ok(BlowupSample {
                point: p.as_slice().to_vec(),
                direction: v.as_slice().to_vec(),
                a: 0.0,
                first,
                block,
                trace,
            })
        })
        .collect::<Result<_>>()?;
    let (max_blowup, min_blowup) = extremes(&runs);
    Ok(DiameterEstimate {
        kind: EstimateKind::Symplectic,
        manifold: m.to_string(),
        applicable: k1.is_some(),
        note: k1.is_none().then(|| "holomorphic curvature is not positive".to_string()),
        k: k1.unwrap_or(0.0),
        k2,
        bound,
        trace_bound,
        horizon,
        samples: runs,
        max_blowup,
        min_blowup,
        empirical_max_distance: None,
        seed,
    })
}
