//! Numerical building blocks: ODE integration, root finding, sampling,
//! finite differences, quadrature and small dense linear algebra.

pub mod lsq;
pub mod ode;
pub mod roots;
pub mod sampling;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

pub use ode::{integrate, OdeOptions, OdeSolution, OdeStatus};
pub use roots::{brent, find_root, find_root_scan, minimize_scalar};
pub use sampling::{halton_sphere, rng_for, sphere_point, sphere_sample, SeededRng};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// First-derivative finite-difference step (applied to unit-normalised inputs).
pub const FD_STEP: f64 = 1e-5;
/// Step for second derivatives and nested first derivatives.
pub const FD_STEP2: f64 = 1e-4;
/// Relative tolerance for Loewner-order and symmetry checks.
pub const LOEWNER_TOL: f64 = 1e-9;
/// Default integrator tolerances.
pub const RTOL: f64 = 1e-10;
pub const ATOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("step size underflow at t = {t_last}")]
    StepUnderflow { t_last: f64 },
    #[error("step budget exhausted at t = {t_last}")]
    MaxSteps { t_last: f64 },
    #[error("no sign change found in [{a}, {b}]")]
    NoBracket { a: f64, b: f64 },
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Central difference `(f(h) - f(-h)) / 2h`.
pub fn central_diff<F: FnMut(f64) -> Vector>(mut f: F, h: f64) -> Vector {
    (f(h) - f(-h)) / (2.0 * h)
}

/// Second difference `(f(h) - 2 f(0) + f(-h)) / h²`.
pub fn second_diff<F: FnMut(f64) -> Vector>(mut f: F, h: f64) -> Vector {
    (f(h) - f(0.0) * 2.0 + f(-h)) / (h * h)
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &Mat, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * (1.0 + m.amax())
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

pub fn max_eigenvalue(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(m)).eigenvalues.max()
}

/// `a ≤ b` in the Loewner order, up to `LOEWNER_TOL·(1 + ‖a‖ + ‖b‖)`.
pub fn loewner_le(a: &Mat, b: &Mat) -> bool {
    let tol = LOEWNER_TOL * (1.0 + a.amax() + b.amax());
    max_eigenvalue(&(a - b)) <= tol
}

/// Modified Gram–Schmidt of `vs` with respect to the inner product `ip`.
/// Vectors that become numerically dependent are dropped.
pub fn gram_schmidt<F: Fn(&Vector, &Vector) -> f64>(vs: &[Vector], ip: F) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &out {
                let c = ip(&w, u);
                w -= u * c;
            }
        }
        let n = ip(&w, &w).max(0.0).sqrt();
        if n > 1e-10 * (1.0 + ip(v, v).max(0.0).sqrt()) {
            out.push(w / n);
        }
    }
    out
}

/// Neumaier-compensated sum in index order (deterministic).
pub fn stable_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = stable_sum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = stable_sum(xs.iter().map(|x| (x - mean).powi(2))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Cumulative composite Simpson integral of uniformly spaced samples.
///
/// Returns `I[j] ≈ ∫_{x_0}^{x_j} f` for every node. Even nodes use Simpson's
/// rule, odd nodes the 3/8 rule on the last three panels; both are exact for
/// cubics.
pub fn cumulative_simpson(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    for j in 1..n {
        if j % 2 == 0 {
            out[j] = out[j - 2] + h / 3.0 * (f[j - 2] + 4.0 * f[j - 1] + f[j]);
        } else if j == 1 {
            // Cubic through the first four nodes when available.
            out[1] = if n >= 4 {
                h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
            } else {
                0.5 * h * (f[0] + f[1])
            };
        } else {
            // Simpson's 3/8 rule on the last three panels.
            out[j] = out[j - 3] + 3.0 * h / 8.0 * (f[j - 3] + 3.0 * f[j - 2] + 3.0 * f[j - 1] + f[j]);
        }
    }
    out
}
