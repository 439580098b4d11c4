//! Matrix Riccati equations along geodesics, their model solutions and
//! blow-up detection.
//!
//! Conventions. The full frame is `v₀ = ξ, v₁ = γ̇, v₂ = Jγ̇, v₃ …` (indices
//! `0 … 2n`). With `M = W − (a/2)J + ½(I+H)C₂` the frame Riccati equation is
//!
//! ```text
//! Ṡ₁ = M S₁ + S₁ Mᵀ − S₁ C₃ S₁ − Q,
//! Q  = R − (H₁₂/4) H J − ¼(I+H) C₁ (I+H) + (a²/4) C₃ + (a/2) K₁,
//! ```
//!
//! `C₁ = e₂₂`, `C₂ = e₂₀`, `C₃ = diag(0, 1, …, 1)`. For `H = 0`, `M = W'` and
//! `Q = L'`. Coefficients are evaluated from the dense geodesic record at
//! every right-hand-side call.
//!
//! Blow-up: the monitored scalar is `−λ_min(S)`; a run blows up when it
//! exceeds [`BLOWUP_LEVEL`] or the step underflows below `1e-13`. The
//! reported time is the last accepted one.

pub mod model;
mod orbit;

pub use model::{
    bbar, det_bbar, first_blowup_time, model_solutions, sbar0, sbar0_asymptotic, sbar0_with_derivative,
    sbar_orbit, sbar_trace, BlowupMode, ModelParams, ModelSolutions,
};
pub use orbit::{orbit_jacobi, OrbitJacobi, OrbitJacobiFlow, OrbitJacobiSample};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesics::GeodesicRecord;
use crate::numerics::{integrate, min_eigenvalue, Mat, NumericsError, OdeOptions, OdeSolution, OdeStatus, Vector};

pub const BLOWUP_LEVEL: f64 = 1e8;
pub const MIN_STEP: f64 = 1e-13;
/// Largest tolerated relative asymmetry of an integrated matrix solution.
pub const SYMMETRY_DRIFT: f64 = 1e-6;
/// Start time for integrations from a point.
pub const SINGULAR_T0: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RiccatiMode {
    /// Full frame equation (all `2n+1` indices).
    Full,
    /// Upper `3×3` block as a Riccati equation in its own right.
    Holomorphic,
    /// Scalar trace of the lower block.
    Trace,
    /// Closed-orbit equation `Ṡ + S² + SA + AᵀS + R = 0`.
    ClosedOrbit,
    /// Riemannian `Ṡ + S² − AS − SAᵀ + R = 0` on `CP^n`.
    Symplectic,
    /// `2×2` block `{γ̇, Jγ̇}` of the symplectic equation.
    SymplecticBlock,
    /// Scalar trace of the lower symplectic block.
    SymplecticTrace,
    /// Caller-supplied coefficients.
    Synthetic,
}

/// Sampled Riccati solution.
#[derive(Debug, Clone)]
pub struct RiccatiTrace {
    pub mode: RiccatiMode,
    pub dim: usize,
    pub times: Vec<f64>,
    pub values: Vec<Mat>,
    pub blowup_time: Option<f64>,
    /// Largest `‖S − Sᵀ‖/(1 + ‖S‖)` seen.
    pub max_asymmetry: f64,
    sol: OdeSolution,
}

impl RiccatiTrace {
    /// Dense evaluation inside the integrated span.
    pub fn eval(&self, t: f64) -> Mat {
        let y = self.sol.eval(t.clamp(self.times[0], self.sol.t_last()));
        Mat::from_column_slice(self.dim, self.dim, &y)
    }

    pub fn t_end(&self) -> f64 {
        self.sol.t_last()
    }

    pub fn last(&self) -> &Mat {
        self.values.last().expect("trace has at least its initial sample")
    }

    /// Scalar value for one-dimensional traces.
    pub fn scalar(&self, t: f64) -> f64 {
        self.eval(t)[(0, 0)]
    }
}

fn monitor(s: &Mat) -> f64 {
    if s.iter().any(|x| !x.is_finite()) {
        return f64::INFINITY;
    }
    -min_eigenvalue(s)
}

/// Integrate `Ṡ = f(t, S)` for a `d×d` matrix from `(t0, s0)` to `t1`,
/// stopping at blow-up.
pub fn integrate_matrix_riccati<F>(mode: RiccatiMode, s0: &Mat, t0: f64, t1: f64, mut f: F) -> Result<RiccatiTrace>
where
    F: FnMut(f64, &Mat) -> Mat,
{
    let d = s0.nrows();
    if !s0.is_square() || d == 0 {
        return Err(Error::InvalidParameter("initial value must be a non-empty square matrix".into()));
    }
    if !(t1 > t0) {
        return Err(Error::InvalidParameter(format!("empty time span [{t0}, {t1}]")));
    }
    if (s0 - s0.transpose()).amax() > 1e-9 * (1.0 + s0.amax()) {
        return Err(Error::InvalidParameter("initial value must be symmetric".into()));
    }
    let opts = OdeOptions {
        h_min: MIN_STEP,
        global_scale: true,
        ..OdeOptions::default()
    };
    let sol = integrate(
        |t, y, out| {
            let s = Mat::from_column_slice(d, d, y);
            out.copy_from_slice(f(t, &s).as_slice());
        },
        t0,
        s0.as_slice(),
        t1,
        &opts,
        |_, y| monitor(&Mat::from_column_slice(d, d, y)) > BLOWUP_LEVEL,
    )
    .or_else(|e| match e {
        NumericsError::MaxSteps { t_last } => Err(Error::RiccatiBlowUp { t: t_last }),
        e => Err(e.into()),
    })?;
    let values: Vec<Mat> = sol.states.iter().map(|y| Mat::from_column_slice(d, d, y)).collect();
    let blowup_time = match sol.status {
        OdeStatus::Completed => None,
        OdeStatus::Stopped | OdeStatus::StepUnderflow => Some(sol.t_last()),
    };
    let mut max_asymmetry: f64 = 0.0;
    for s in &values {
        if s.iter().all(|x| x.is_finite()) {
            max_asymmetry = max_asymmetry.max((s - s.transpose()).amax() / (1.0 + s.amax()));
        }
    }
    if max_asymmetry > SYMMETRY_DRIFT {
        return Err(Error::Numerics(NumericsError::NoConvergence(format!(
            "Riccati solution lost symmetry (relative drift {max_asymmetry:.2e})"
        ))));
    }
    Ok(RiccatiTrace {
        mode,
        dim: d,
        times: sol.times.clone(),
        values,
        blowup_time,
        max_asymmetry,
        sol,
    })
}

fn unit(d: usize, i: usize, j: usize) -> Mat {
    let mut m = Mat::zeros(d, d);
    m[(i, j)] = 1.0;
    m
}

/// `C₃ = diag(0, 1, …, 1)`.
pub fn c3(d: usize) -> Mat {
    let mut m = Mat::identity(d, d);
    m[(0, 0)] = 0.0;
    m
}

/// Coefficient matrices of the frame Riccati equation at one time.
#[derive(Debug, Clone)]
pub struct FrameCoefficients {
    pub t: f64,
    pub a: f64,
    /// Transport matrix `W_ij = ⟨Dvᵢ/dt, v_j⟩`.
    pub w: Mat,
    /// `J_ij = ⟨Jvᵢ, v_j⟩`.
    pub j: Mat,
    /// `H_ij = ⟨hvᵢ, v_j⟩`.
    pub h: Mat,
    /// `K₁,ij = ⟨(∇_{v_j}J)vᵢ + (∇_{vᵢ}J)v_j, v₁⟩`.
    pub k1: Mat,
    /// `R_ij = ⟨Rm(vᵢ, γ̇)γ̇, v_j⟩`.
    pub r: Mat,
}

impl FrameCoefficients {
    /// Evaluate from a framed record. `K₁` and `H` are only computed on
    /// contact manifolds.
    pub fn at(record: &GeodesicRecord, t: f64) -> Self {
        let m = record.manifold();
        let st = record.state(t);
        let fr = record.frame(t);
        let p = &st.position;
        let vs = &fr.vectors;
        let d = vs.len();
        let ip = |x: &Vector, y: &Vector| m.metric(p, x, y);
        let jv: Vec<Vector> = vs.iter().map(|v| m.j(p, v)).collect();
        let j = Mat::from_fn(d, d, |r, c| ip(&jv[r], &vs[c]));
        let rv: Vec<Vector> = vs
            .iter()
            .map(|v| m.riemann(p, v, &st.velocity, &st.velocity))
            .collect();
        let r = Mat::from_fn(d, d, |a, b| ip(&rv[a], &vs[b]));
        let (h, k1) = if m.is_contact() {
            let mut nj = vec![vec![Vector::zeros(0); d]; d];
            for (a, row) in nj.iter_mut().enumerate() {
                for (b, e) in row.iter_mut().enumerate() {
                    // (∇_{v_b} J) v_a
                    *e = m.nabla_j(p, &vs[b], &vs[a]);
                }
            }
            let v1 = fr.v(1);
            let k1 = Mat::from_fn(d, d, |a, b| ip(&(&nj[a][b] + &nj[b][a]), v1));
            (record.h_matrix(t), k1)
        } else {
            (Mat::zeros(d, d), Mat::zeros(d, d))
        };
        Self {
            t,
            a: st.a,
            w: record.transport_matrix(t),
            j,
            h,
            k1,
            r,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    /// `M = W − (a/2)J + ½(I+H)C₂`.
    pub fn m_matrix(&self) -> Mat {
        let d = self.dim();
        let ih = Mat::identity(d, d) + &self.h;
        &self.w - &self.j * (self.a / 2.0) + ih * unit(d, 2, 0) * 0.5
    }

    /// `Q = R − (H₁₂/4)HJ − ¼(I+H)C₁(I+H) + (a²/4)C₃ + (a/2)K₁`.
    pub fn q_matrix(&self) -> Mat {
        let d = self.dim();
        let ih = Mat::identity(d, d) + &self.h;
        let a = self.a;
        &self.r - &self.h * &self.j * (self.h[(1, 2)] / 4.0) - &ih * unit(d, 2, 2) * &ih * 0.25
            + c3(d) * (a * a / 4.0)
            + &self.k1 * (a / 2.0)
    }

    /// `|N|²` with `Nᵢ = W'₂ᵢ`, `i ≥ 3` (the coupling between the blocks).
    pub fn coupling(&self) -> Mat {
        let d = self.dim();
        let m = self.m_matrix();
        let w1 = m.view((0, 3), (3, d - 3)).into_owned();
        &w1 * w1.transpose()
    }
}

fn require_frame(record: &GeodesicRecord, contact: bool) -> Result<()> {
    if !record.has_frame() {
        return Err(Error::InvalidParameter("the geodesic record has no transported frame".into()));
    }
    if record.manifold().is_contact() != contact {
        return Err(Error::NotApplicable(format!(
            "{} is not a {} manifold",
            record.manifold(),
            if contact { "contact" } else { "Riemannian (CP^n)" }
        )));
    }
    Ok(())
}

fn check_span(record: &GeodesicRecord, t0: f64, t1: f64) -> Result<()> {
    if !(t0 > 0.0 && t1 > t0 && t1 <= record.t_max * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "time span [{t0}, {t1}] must satisfy 0 < t0 < t1 ≤ {}",
            record.t_max
        )));
    }
    Ok(())
}

/// Small-`t` initial value of the full frame solution: the asymptotic
/// `3×3` block and `(1/t)I` below.
pub fn s1_initial(d: usize, a: f64, t0: f64) -> Mat {
    let mut s = Mat::identity(d, d) / t0;
    s.view_mut((0, 0), (3, 3)).copy_from(&sbar0_asymptotic(a, t0));
    s
}

/// Integrate the full frame Riccati equation along a framed contact
/// geodesic record.
pub fn integrate_riccati_s1(record: &GeodesicRecord, s1_init: &Mat, t0: f64, t1: f64) -> Result<RiccatiTrace> {
    require_frame(record, true)?;
    check_span(record, t0, t1)?;
    let d = record.frame(0.0).len();
    if s1_init.nrows() != d {
        return Err(Error::InvalidParameter(format!("initial value must be {d}×{d}")));
    }
    let c = c3(d);
    integrate_matrix_riccati(RiccatiMode::Full, s1_init, t0, t1, |t, s| {
        let k = FrameCoefficients::at(record, t);
        let mm = k.m_matrix();
        &mm * s + s * mm.transpose() - s * &c * s - k.q_matrix()
    })
}

/// Upper `3×3` block run as its own Riccati equation,
/// `Ṡ₀ = W₀'S₀ + S₀W₀'ᵀ − S₀C̄₃S₀ − L₀' + W₁'W₁'ᵀ`.
pub fn integrate_riccati_holomorphic(record: &GeodesicRecord, t0: f64, t1: f64) -> Result<RiccatiTrace> {
    require_frame(record, true)?;
    check_span(record, t0, t1)?;
    let c = c3(3);
    let s0 = sbar0_asymptotic(record.start.a, t0);
    integrate_matrix_riccati(RiccatiMode::Holomorphic, &s0, t0, t1, |t, s| {
        let k = FrameCoefficients::at(record, t);
        let mm = k.m_matrix().view((0, 0), (3, 3)).into_owned();
        let q = k.q_matrix().view((0, 0), (3, 3)).into_owned();
        &mm * s + s * mm.transpose() - s * &c * s - q + k.coupling()
    })
}

/// Scalar trace of the lower block,
/// `ṡ = −s²/(2n−2) − tr(L₂' − W₁'ᵀW₁')`, from `s(t₀) = (2n−2)/t₀`.
pub fn integrate_riccati_trace(record: &GeodesicRecord, t0: f64, t1: f64) -> Result<RiccatiTrace> {
    require_frame(record, true)?;
    check_span(record, t0, t1)?;
    let d = record.frame(0.0).len();
    if d < 5 {
        return Err(Error::NotApplicable("the trace block needs n ≥ 2".into()));
    }
    let k = (d - 3) as f64;
    let s0 = Mat::from_element(1, 1, k / t0);
    integrate_matrix_riccati(RiccatiMode::Trace, &s0, t0, t1, |t, s| {
        let c = FrameCoefficients::at(record, t);
        let q = c.q_matrix();
        let lower: f64 = (3..d).map(|i| q[(i, i)]).sum();
        let coupling = c.coupling()[(2, 2)];
        Mat::from_element(1, 1, -s[(0, 0)] * s[(0, 0)] / k - (lower - coupling))
    })
}

/// Indices of the closed-orbit frame `ξ, Jγ̇, v₃ …` inside the full frame.
fn orbit_indices(d: usize) -> Vec<usize> {
    std::iter::once(0).chain(2..d).collect()
}

fn select(m: &Mat, idx: &[usize]) -> Mat {
    Mat::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Small-`t` initial value of the closed-orbit solution:
/// `[[0, −½], [−½, 1/t₀]] ⊕ (1/t₀) I`.
pub fn orbit_initial(d: usize, t0: f64) -> Mat {
    let mut s = Mat::identity(d, d) / t0;
    s[(0, 0)] = 0.0;
    s[(0, 1)] = -0.5;
    s[(1, 0)] = -0.5;
    s
}

/// Integrate `Ṡ + S² + SA + AᵀS + R = 0` along a geodesic leaving a closed
/// Reeb orbit orthogonally (`a = 0`).
pub fn integrate_riccati_orbit(record: &GeodesicRecord, t0: f64, t1: f64) -> Result<RiccatiTrace> {
    require_frame(record, true)?;
    check_span(record, t0, t1)?;
    if record.start.a.abs() > 1e-12 {
        return Err(Error::InvalidParameter("geodesics leaving an orbit have a = 0".into()));
    }
    let idx = orbit_indices(record.frame(0.0).len());
    let s0 = orbit_initial(idx.len(), t0);
    integrate_matrix_riccati(RiccatiMode::ClosedOrbit, &s0, t0, t1, |t, s| {
        let k = FrameCoefficients::at(record, t);
        let a = select(&k.w, &idx);
        let r = select(&k.r, &idx);
        -(s * s) - s * &a - a.transpose() * s - r
    })
}

/// Blocks `(S₀, S₁, S₂)` of a closed-orbit solution: `2×2`, `2×(2n−2)`,
/// `(2n−2)×(2n−2)`.
pub fn orbit_blocks(s: &Mat) -> (Mat, Mat, Mat) {
    let d = s.nrows();
    (
        s.view((0, 0), (2, 2)).into_owned(),
        s.view((0, 2), (2, d - 2)).into_owned(),
        s.view((2, 2), (d - 2, d - 2)).into_owned(),
    )
}

/// Full symplectic equation `Ṡ = −S² + AS + SAᵀ − R` on `CP^n`, from
/// `S(t₀) = I/t₀`.
pub fn integrate_riccati_symplectic(record: &GeodesicRecord, t0: f64, t1: f64) -> Result<RiccatiTrace> {
    require_frame(record, false)?;
    check_span(record, t0, t1)?;
    let d = record.frame(0.0).len();
    let s0 = Mat::identity(d, d) / t0;
    integrate_matrix_riccati(RiccatiMode::Symplectic, &s0, t0, t1, |t, s| {
        let k = FrameCoefficients::at(record, t);
        -(s * s) + &k.w * s + s * k.w.transpose() - k.r
    })
}

/// `2×2` block `Ṡ₀ = −S₀² + A₁A₁ᵀ − R₀` of the symplectic equation.
pub fn integrate_symplectic_block(record: &GeodesicRecord, t0: f64, t1: f64) -> Result<RiccatiTrace> {
    require_frame(record, false)?;
    check_span(record, t0, t1)?;
    let d = record.frame(0.0).len();
    let s0 = Mat::identity(2, 2) / t0;
    integrate_matrix_riccati(RiccatiMode::SymplecticBlock, &s0, t0, t1, |t, s| {
        let k = FrameCoefficients::at(record, t);
        let a1 = k.w.view((0, 2), (2, d - 2)).into_owned();
        let r0 = k.r.view((0, 0), (2, 2)).into_owned();
        -(s * s) + &a1 * a1.transpose() - r0
    })
}

/// Scalar trace `ṡ = −s²/(2n−2) − tr(R₂ − A₁ᵀA₁)` of the lower symplectic
/// block.
pub fn integrate_symplectic_trace(record: &GeodesicRecord, t0: f64, t1: f64) -> Result<RiccatiTrace> {
    require_frame(record, false)?;
    check_span(record, t0, t1)?;
    let d = record.frame(0.0).len();
    if d < 4 {
        return Err(Error::NotApplicable("the trace block needs n ≥ 2".into()));
    }
    let k = (d - 2) as f64;
    let s0 = Mat::from_element(1, 1, k / t0);
    integrate_matrix_riccati(RiccatiMode::SymplecticTrace, &s0, t0, t1, |t, s| {
        let c = FrameCoefficients::at(record, t);
        let a1 = c.w.view((0, 2), (2, d - 2)).into_owned();
        let r2: f64 = (2..d).map(|i| c.r[(i, i)]).sum();
        let coupling = (a1.transpose() * &a1).trace();
        Mat::from_element(1, 1, -s[(0, 0)] * s[(0, 0)] / k - (r2 - coupling))
    })
}

/// Blow-up time of a numerical trace.
pub fn trace_blowup_time(trace: &RiccatiTrace) -> Result<f64> {
    trace
        .blowup_time
        .ok_or_else(|| Error::NotApplicable(format!("no blow-up up to t = {}", trace.t_end())))
}

#[cfg(test)]
mod tests;
