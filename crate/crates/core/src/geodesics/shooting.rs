//! Shooting for Carnot–Carathéodory distances.
//!
//! `cc_distance` scans a low-discrepancy set of horizontal directions times a
//! grid of `a` values, keeps the shots whose trajectories pass closest to the
//! target, and refines each with Levenberg–Marquardt on
//! `(direction chart, a, length)`. The shortest converged shot wins; ties
//! are broken by shot index so the result is deterministic.
//!
//! `OrbitDistance` measures the distance to a closed Reeb orbit `C`. Minimisers
//! leave `C` orthogonally, hence with `a = 0`, and the Reeb flow is an
//! isometry, so every such geodesic is `Φ_s ∘ exp_x` for one base point `x`.

use rayon::prelude::*;
use std::f64::consts::PI;

use super::reeb::{first_return, reeb_flow};
use super::{integrate_geodesic, integrate_geodesic_with, GeodesicOptions, GeodesicRecord};
use crate::error::{Error, Result};
use crate::manifolds::{Manifold, Model};
use crate::numerics::lsq::{levenberg_marquardt, LmOptions};
use crate::numerics::{gram_schmidt, halton_sphere, OdeOptions, Vector};

#[derive(Debug, Clone)]
pub struct ShootConfig {
    /// Number of initial horizontal directions.
    pub directions: usize,
    /// Number of `a` values in `[-a_max, a_max]`.
    pub a_values: usize,
    /// Defaults to `4k`.
    pub a_max: Option<f64>,
    /// Longest shot; defaults to `2π/k` (`2π + 2|q − p|` on Heisenberg).
    pub l_max: Option<f64>,
    /// Number of scan candidates passed to refinement.
    pub refine: usize,
    /// Largest accepted end-point gap.
    pub gap_tol: f64,
}

impl Default for ShootConfig {
    fn default() -> Self {
        Self {
            directions: 16,
            a_values: 9,
            a_max: None,
            l_max: None,
            refine: 8,
            gap_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShootResult {
    pub distance: f64,
    pub a: f64,
    pub velocity: Vector,
    pub end_gap: f64,
    /// Number of refined shots that met the gap tolerance.
    pub converged: usize,
    pub witness: GeodesicRecord,
}

/// A `g`-orthonormal basis of the horizontal space at `p` (of `T_p` on `CP^n`).
pub fn horizontal_basis(m: &Manifold, p: &Vector) -> Vec<Vector> {
    let cands: Vec<Vector> = m.tangent_basis(p).iter().map(|e| m.horizontal(p, e)).collect();
    gram_schmidt(&cands, |a, b| m.metric(p, a, b))
}

/// Unit horizontal vector `normalize(c + Σ θᵢ tᵢ)` in a chart around `c`.
struct DirectionChart {
    center: Vector,
    tangents: Vec<Vector>,
}

impl DirectionChart {
    fn new(m: &Manifold, p: &Vector, center: &Vector) -> Self {
        let mut cands = vec![center.clone()];
        cands.extend(horizontal_basis(m, p));
        let basis = gram_schmidt(&cands, |a, b| m.metric(p, a, b));
        Self {
            center: basis[0].clone(),
            tangents: basis[1..].to_vec(),
        }
    }

    fn dim(&self) -> usize {
        self.tangents.len()
    }

    fn at(&self, m: &Manifold, p: &Vector, theta: &[f64]) -> Vector {
        let mut v = self.center.clone();
        for (t, th) in self.tangents.iter().zip(theta) {
            v += t * *th;
        }
        let n = m.norm(p, &v);
        v / n
    }
}

fn fast_opts() -> GeodesicOptions {
    GeodesicOptions {
        ode: OdeOptions::with_tolerances(1e-12, 1e-13).sparse(),
        with_frame: false,
    }
}

/// End point of the geodesic `(v, a)` at signed length `l`.
fn endpoint(m: &Manifold, p: &Vector, v: &Vector, a: f64, l: f64) -> Option<Vector> {
    let (v, a, l) = if l < 0.0 { (-v, -a, -l) } else { (v.clone(), a, l) };
    integrate_geodesic_with(m, p, &v, a, l, &fast_opts())
        .ok()
        .map(|r| r.end().position)
}

fn default_lengths(m: &Manifold, p: &Vector, q: &Vector) -> (f64, f64) {
    match m.model() {
        Model::Hopf { k, .. } | Model::Base { k, .. } => (4.0 * k, 2.0 * PI / k),
        Model::Heisenberg => (4.0, 2.0 * PI + 2.0 * (q - p).norm()),
    }
}

/// Scan candidate: shot index, best gap, length at the best gap, deck index.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    index: usize,
    gap: f64,
    l: f64,
    deck: i64,
    a: f64,
}

/// Carnot–Carathéodory (or, on `CP^n`, Riemannian) distance between `p`
/// and `q` by multi-start shooting. Returns an upper bound witnessed by a
/// geodesic whose end point is within `gap_tol` of `q`.
pub fn cc_distance(m: &Manifold, p: &Vector, q: &Vector, cfg: &ShootConfig) -> Result<ShootResult> {
    if m.constraint_residual(p) > 1e-9 || m.constraint_residual(q) > 1e-9 {
        return Err(Error::InvalidParameter("points must lie on the manifold".into()));
    }
    if m.quotient_gap(p, q) < 1e-12 {
        return Err(Error::InvalidParameter("p and q coincide".into()));
    }
    let (a_default, l_default) = default_lengths(m, p, q);
    let a_max = if m.is_contact() { cfg.a_max.unwrap_or(a_default) } else { 0.0 };
    let l_max = cfg.l_max.unwrap_or(l_default);
    let basis = horizontal_basis(m, p);
    let dirs = halton_sphere(basis.len() - 1, cfg.directions.max(1));
    let na = if m.is_contact() { cfg.a_values.max(1) } else { 1 };
    let a_grid: Vec<f64> = (0..na)
        .map(|i| if na == 1 { 0.0 } else { -a_max + 2.0 * a_max * i as f64 / (na - 1) as f64 })
        .collect();
    let decks: Vec<i64> = match m.model() {
        Model::Hopf { m: order, .. } => (0..order as i64).collect(),
        _ => vec![0],
    };
    let targets: Vec<Vector> = decks.iter().map(|&j| m.deck(q, j)).collect();
    let shots: Vec<(Vector, f64)> = dirs
        .iter()
        .flat_map(|d| {
            let v = basis.iter().zip(d).fold(Vector::zeros(p.len()), |acc, (b, c)| acc + b * *c);
            a_grid.iter().map(move |&a| (v.clone(), a))
        })
        .collect();

    // Scan: closest approach of each shot to any deck translate of q.
    let mut cands: Vec<Candidate> = shots
        .par_iter()
        .enumerate()
        .map(|(index, (v, a))| {
            let mut best = Candidate {
                index,
                gap: f64::INFINITY,
                l: l_max,
                deck: 0,
                a: *a,
            };
            let Ok(rec) = integrate_geodesic(m, p, v, *a, l_max) else {
                return best;
            };
            let samples = 400;
            for s in 1..=samples {
                let t = l_max * s as f64 / samples as f64;
                let x = rec.state(t).position;
                for (j, tq) in targets.iter().enumerate() {
                    let g = (&x - tq).norm();
                    if g < best.gap {
                        best.gap = g;
                        best.l = t;
                        best.deck = j as i64;
                    }
                }
            }
            best
        })
        .collect();
    cands.sort_by(|x, y| x.gap.total_cmp(&y.gap).then(x.index.cmp(&y.index)));
    cands.truncate(cfg.refine.max(1));

    let refined: Vec<Option<(f64, f64, Vector, f64, usize)>> = cands
        .par_iter()
        .map(|c| {
            let (v0, _) = &shots[c.index];
            let chart = DirectionChart::new(m, p, v0);
            let target = &targets[c.deck as usize];
            let dim = chart.dim();
            let contact = m.is_contact();
            let mut x0 = vec![0.0; dim];
            if contact {
                x0.push(c.a);
            }
            x0.push(c.l);
            let res = levenberg_marquardt(
                |x| {
                    let v = chart.at(m, p, &x[..dim]);
                    let a = if contact { x[dim] } else { 0.0 };
                    let l = x[x.len() - 1];
                    endpoint(m, p, &v, a, l).map(|e| (e - target).as_slice().to_vec())
                },
                &x0,
                &LmOptions::default(),
            );
            let mut v = chart.at(m, p, &res.x[..dim]);
            let mut a = if contact { res.x[dim] } else { 0.0 };
            let mut l = res.x[res.x.len() - 1];
            if l < 0.0 {
                v = -v;
                a = -a;
                l = -l;
            }
            res.gap.is_finite().then_some((l, a, v, res.gap, c.index))
        })
        .collect();

    let mut best: Option<(f64, f64, Vector, f64, usize)> = None;
    let mut converged = 0;
    let mut best_gap = f64::INFINITY;
    for r in refined.into_iter().flatten() {
        best_gap = best_gap.min(r.3);
        if r.3 > cfg.gap_tol {
            continue;
        }
        converged += 1;
        let better = match &best {
            None => true,
            Some(b) => r.0 < b.0 - 1e-9 || ((r.0 - b.0).abs() <= 1e-9 && r.4 < b.4),
        };
        if better {
            best = Some(r);
        }
    }
    let Some((l, a, v, _, _)) = best else {
        return Err(Error::ShootingFailed { gap: best_gap });
    };
    let witness = integrate_geodesic(m, p, &v, a, l)?;
    let end_gap = m.quotient_gap(&witness.end().position, q);
    Ok(ShootResult {
        distance: l,
        a,
        velocity: v,
        end_gap,
        converged,
        witness,
    })
}

/// Distance to the closed Reeb orbit through a base point, measured in the
/// cover (the orbit there is the full preimage of the orbit in the quotient).
#[derive(Debug, Clone)]
pub struct OrbitDistance {
    manifold: Manifold,
    pub base: Vector,
    /// Period of the orbit in the cover.
    pub period: f64,
    /// Longest geodesic length considered.
    pub l_max: f64,
    basis: Vec<Vector>,
    directions: Vec<Vector>,
    /// `table[j][i] = exp_x(tᵢ · directions[j])`.
    table: Vec<Vec<Vector>>,
    t_grid: Vec<f64>,
    s_grid: Vec<f64>,
}

/// Result of [`OrbitDistance::distance`].
#[derive(Debug, Clone)]
pub struct OrbitFoot {
    pub distance: f64,
    /// Orbit parameter of the foot point.
    pub s: f64,
    /// Initial direction at the base point (before applying `Φ_s`).
    pub direction: Vector,
    pub gap: f64,
}

impl OrbitDistance {
    pub fn new(m: &Manifold, base: &Vector, l_max: f64, directions: usize, t_cells: usize, s_cells: usize) -> Result<Self> {
        let period = first_return(m, base, false)?;
        let basis = horizontal_basis(m, base);
        let dirs: Vec<Vector> = if basis.len() == 2 {
            (0..directions)
                .map(|j| {
                    let th = 2.0 * PI * j as f64 / directions as f64;
                    &basis[0] * th.cos() + &basis[1] * th.sin()
                })
                .collect()
        } else {
            halton_sphere(basis.len() - 1, directions)
                .iter()
                .map(|d| basis.iter().zip(d).fold(Vector::zeros(base.len()), |acc, (b, c)| acc + b * *c))
                .collect()
        };
        let t_grid: Vec<f64> = (0..=t_cells).map(|i| l_max * i as f64 / t_cells as f64).collect();
        let table: Vec<Vec<Vector>> = dirs
            .par_iter()
            .map(|v| -> Result<Vec<Vector>> {
                let rec = integrate_geodesic(m, base, v, 0.0, l_max)?;
                Ok(t_grid.iter().map(|&t| rec.state(t).position).collect())
            })
            .collect::<Result<_>>()?;
        let s_grid = (0..s_cells).map(|i| period * i as f64 / s_cells as f64).collect();
        Ok(Self {
            manifold: m.clone(),
            base: base.clone(),
            period,
            l_max,
            basis,
            directions: dirs,
            table,
            t_grid,
            s_grid,
        })
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn horizontal_basis(&self) -> &[Vector] {
        &self.basis
    }

    /// Distance from `y` to the orbit (in the cover). Returns `None` when no
    /// geodesic of length `≤ l_max` from the orbit reaches `y`.
    pub fn distance(&self, y: &Vector) -> Option<OrbitFoot> {
        let m = &self.manifold;
        let x = &self.base;
        // Coarse search over (s, direction, t).
        let mut cands: Vec<(f64, f64, usize, f64)> = Vec::new();
        for &s in &self.s_grid {
            let ys = reeb_flow(m, y, -s).ok()?;
            if (&ys - x).norm() < 1e-12 {
                return Some(OrbitFoot {
                    distance: 0.0,
                    s,
                    direction: self.directions[0].clone(),
                    gap: 0.0,
                });
            }
            let mut best = (f64::INFINITY, 0, 0.0);
            for (j, row) in self.table.iter().enumerate() {
                for (i, pt) in row.iter().enumerate().skip(1) {
                    let d = (pt - &ys).norm_squared();
                    if d < best.0 {
                        best = (d, j, self.t_grid[i]);
                    }
                }
            }
            cands.push((best.0, s, best.1, best.2));
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        cands.truncate(3);
        let mut best: Option<OrbitFoot> = None;
        for (_, s0, j, t0) in cands {
            let chart = DirectionChart::new(m, x, &self.directions[j]);
            let dim = chart.dim();
            let mut x0 = vec![s0];
            x0.extend(std::iter::repeat_n(0.0, dim));
            x0.push(t0);
            let res = levenberg_marquardt(
                |z| {
                    let v = chart.at(m, x, &z[1..1 + dim]);
                    let l = z[dim + 1];
                    let target = reeb_flow(m, y, -z[0]).ok()?;
                    endpoint(m, x, &v, 0.0, l).map(|e| (e - target).as_slice().to_vec())
                },
                &x0,
                &LmOptions {
                    gap_tol: 1e-12,
                    ..LmOptions::default()
                },
            );
            if res.gap > 1e-8 {
                continue;
            }
            let mut v = chart.at(m, x, &res.x[1..1 + dim]);
            let mut l = res.x[dim + 1];
            if l < 0.0 {
                v = -v;
                l = -l;
            }
            if best.as_ref().is_none_or(|b| l < b.distance - 1e-10) {
                best = Some(OrbitFoot {
                    distance: l,
                    s: res.x[0].rem_euclid(self.period),
                    direction: v,
                    gap: res.gap,
                });
            }
        }
        best
    }
}
