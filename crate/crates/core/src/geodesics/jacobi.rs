//! Variations of geodesics: the linearised geodesic flow integrated next to
//! the geodesic itself.
//!
//! A variation is given by its initial data `(δγ, δγ̇, δa)`; the first
//! component of the solution is a Jacobi field along `γ` when the variation
//! is through geodesics. The linearised right-hand side is a central
//! directional difference of the nonlinear one.

use super::{check_start, geodesic_rhs, unpack, GeodesicState};
use crate::error::{Error, Result};
use crate::manifolds::Manifold;
use crate::numerics::{integrate, NumericsError, OdeOptions, OdeSolution, OdeStatus, Vector};

/// Initial data of a variation.
#[derive(Debug, Clone)]
pub struct Variation {
    pub position: Vector,
    pub velocity: Vector,
    pub a: f64,
}

impl Variation {
    pub fn new(position: Vector, velocity: Vector, a: f64) -> Self {
        Self { position, velocity, a }
    }
}

#[derive(Debug, Clone)]
pub struct JacobiRecord {
    manifold: Manifold,
    count: usize,
    sol: OdeSolution,
    pub t_max: f64,
}

const LIN_STEP: f64 = 1e-6;

fn linearised(m: &Manifold, y: &[f64], d: &[f64], out: &mut [f64]) {
    let dn = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    if dn == 0.0 {
        out.fill(0.0);
        return;
    }
    let eps = LIN_STEP / dn;
    let yp: Vec<f64> = y.iter().zip(d).map(|(a, b)| a + eps * b).collect();
    let ym: Vec<f64> = y.iter().zip(d).map(|(a, b)| a - eps * b).collect();
    let mut fp = vec![0.0; y.len()];
    let mut fm = vec![0.0; y.len()];
    geodesic_rhs(m, 0, &yp, &mut fp);
    geodesic_rhs(m, 0, &ym, &mut fm);
    for i in 0..out.len() {
        out[i] = (fp[i] - fm[i]) / (2.0 * eps);
    }
}

impl JacobiRecord {
    /// Integrate the geodesic from `(p, v, a)` and the given variations on
    /// `[0, t_max]`.
    pub fn integrate(
        m: &Manifold,
        p: &Vector,
        v: &Vector,
        a: f64,
        variations: &[Variation],
        t_max: f64,
    ) -> Result<Self> {
        check_start(m, p, v, a)?;
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_max must be positive, got {t_max}")));
        }
        let n = m.ambient_dim();
        let b = 2 * n + 1;
        let mut y0 = Vec::with_capacity(b * (variations.len() + 1));
        y0.extend_from_slice(p.as_slice());
        y0.extend_from_slice(v.as_slice());
        y0.push(a);
        for var in variations {
            y0.extend_from_slice(var.position.as_slice());
            y0.extend_from_slice(var.velocity.as_slice());
            y0.push(var.a);
        }
        let count = variations.len();
        let opts = OdeOptions::with_tolerances(1e-11, 1e-12);
        let sol = integrate(
            |_, y, out| {
                geodesic_rhs(m, 0, &y[..b], &mut out[..b]);
                for i in 0..count {
                    let r = b * (i + 1)..b * (i + 2);
                    linearised(m, &y[..b], &y[r.clone()], &mut out[r]);
                }
            },
            0.0,
            &y0,
            t_max,
            &opts,
            |_, _| false,
        )?;
        if sol.status != OdeStatus::Completed {
            return Err(NumericsError::StepUnderflow { t_last: sol.t_last() }.into());
        }
        Ok(Self {
            manifold: m.clone(),
            count,
            sol,
            t_max,
        })
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn times(&self) -> &[f64] {
        &self.sol.times
    }

    /// Geodesic state and the variation vectors `(δγ, δγ̇)` at `t`.
    pub fn at(&self, t: f64) -> (GeodesicState, Vec<(Vector, Vector)>) {
        let n = self.manifold.ambient_dim();
        let b = 2 * n + 1;
        let y = self.sol.eval(t.clamp(0.0, self.t_max));
        let (p, v, a) = unpack(&y[..b], n);
        let fields = (0..self.count)
            .map(|i| {
                let s = &y[b * (i + 1)..b * (i + 2)];
                (Vector::from_column_slice(&s[..n]), Vector::from_column_slice(&s[n..2 * n]))
            })
            .collect();
        (
            GeodesicState {
                t,
                position: p,
                velocity: v,
                a,
            },
            fields,
        )
    }
}
