//! Reeb flow and closed-orbit detection.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::manifolds::{rotate_phase, Manifold, Model};
use crate::numerics::{minimize_scalar, Vector};

/// `Φ_s(p)`, the time-`s` flow of `ξ`. On the models the flow is the circle
/// action `z ↦ e^{-ik²s/2} z` (a translation in `z` on the Heisenberg group).
pub fn reeb_flow(m: &Manifold, p: &Vector, s: f64) -> Result<Vector> {
    match m.model() {
        Model::Hopf { k, .. } => Ok(rotate_phase(p, -0.5 * k * k * s)),
        Model::Heisenberg => {
            let mut q = p.clone();
            q[2] += s;
            Ok(q)
        }
        Model::Base { .. } => Err(Error::NotApplicable(format!("{m} has no Reeb field"))),
    }
}

/// A return of the Reeb orbit through `p` to (a deck translate of) `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitReturn {
    pub s: f64,
    pub gap: f64,
}

/// Parameters `s ∈ (0, s_max]` where `Φ_s(p)` comes within `radius` of `p`
/// (in the quotient when `modulo_deck`, else in the cover). Local minima of
/// the gap are located on a grid of `grid` cells and refined.
pub fn reeb_returns(
    m: &Manifold,
    p: &Vector,
    s_max: f64,
    radius: f64,
    grid: usize,
    modulo_deck: bool,
) -> Result<Vec<OrbitReturn>> {
    let gap = |s: f64| -> f64 {
        let q = reeb_flow(m, p, s).unwrap_or_else(|_| p.clone());
        if modulo_deck {
            m.quotient_gap(&q, p)
        } else {
            (q - p).norm()
        }
    };
    reeb_flow(m, p, 0.0)?;
    let h = s_max / grid as f64;
    let vals: Vec<f64> = (0..=grid + 1).map(|i| gap(i as f64 * h)).collect();
    let mut out = Vec::new();
    for i in 1..=grid {
        if vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1] {
            let lo = (i as f64 - 1.0) * h;
            let hi = (i as f64 + 1.0) * h;
            let (s, g) = minimize_scalar(gap, lo, hi, 1e-13);
            if g <= radius && s > 0.5 * h && s <= s_max * (1.0 + 1e-12) {
                if out.last().is_none_or(|r: &OrbitReturn| (s - r.s).abs() > h) {
                    out.push(OrbitReturn { s, gap: g });
                }
            }
        }
    }
    Ok(out)
}

/// First return time of the Reeb orbit through `p`, searching up to
/// `s_max` (defaults to a little over the model cover period).
pub fn first_return(m: &Manifold, p: &Vector, modulo_deck: bool) -> Result<f64> {
    let s_max = match m.model() {
        Model::Hopf { k, .. } => 1.05 * 4.0 * PI / (k * k),
        Model::Heisenberg => return Err(Error::NotApplicable("Reeb orbits of the Heisenberg group are not closed".into())),
        Model::Base { .. } => return Err(Error::NotApplicable(format!("{m} has no Reeb field"))),
    };
    let hits = reeb_returns(m, p, s_max, 1e-7, 2048, modulo_deck)?;
    hits.first()
        .map(|r| r.s)
        .ok_or_else(|| Error::NotApplicable("no closed Reeb orbit found".into()))
}

impl Manifold {
    /// Closed-form length `4π/(m k²)` of the Reeb orbits.
    pub fn reeb_orbit_length(&self) -> Result<f64> {
        match self.model() {
            Model::Hopf { k, m, .. } => Ok(4.0 * PI / (m as f64 * k * k)),
            Model::Heisenberg => Err(Error::NotApplicable("Reeb orbits of the Heisenberg group are not closed".into())),
            Model::Base { .. } => Err(Error::NotApplicable(format!("{self} has no Reeb field"))),
        }
    }
}
