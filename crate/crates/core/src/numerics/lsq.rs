//! Levenberg–Marquardt for small nonlinear least-squares problems with a
//! forward-difference Jacobian.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop once `‖r‖ ≤ gap_tol`.
    pub gap_tol: f64,
    /// Relative forward-difference step.
    pub fd_step: f64,
    /// Largest allowed parameter update (∞-norm).
    pub max_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 60,
            gap_tol: 1e-11,
            fd_step: 1e-7,
            max_step: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub x: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
}

/// Minimise `‖r(x)‖` starting from `x0`. `r` returns `None` where it cannot
/// be evaluated; such points are treated as infinitely bad.
pub fn levenberg_marquardt<F>(mut r: F, x0: &[f64], opts: &LmOptions) -> LmResult
where
    F: FnMut(&[f64]) -> Option<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut rx = match r(&x) {
        Some(v) => v,
        None => {
            return LmResult {
                x,
                gap: f64::INFINITY,
                iterations: 0,
            }
        }
    };
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut gap = norm(&rx);
    let mut lambda = 1e-3;
    let mut it = 0;
    while it < opts.max_iter && gap > opts.gap_tol {
        it += 1;
        let m = rx.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        let mut ok = true;
        for c in 0..n {
            let h = opts.fd_step * (1.0 + x[c].abs());
            let mut xp = x.clone();
            xp[c] += h;
            match r(&xp) {
                Some(rp) => {
                    for i in 0..m {
                        jac[(i, c)] = (rp[i] - rx[i]) / h;
                    }
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }
        let rv = DVector::from_vec(rx.clone());
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &rv;
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for d in 0..n {
                a[(d, d)] += lambda * (1.0 + jtj[(d, d)]);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let smax = step.amax();
            let scale = if smax > opts.max_step { opts.max_step / smax } else { 1.0 };
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + scale * b).collect();
            if let Some(rn) = r(&xn) {
                let gn = norm(&rn);
                if gn < gap {
                    x = xn;
                    rx = rn;
                    gap = gn;
                    lambda = (lambda * 0.2).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    LmResult {
        x,
        gap,
        iterations: it,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_rosenbrock_residuals() {
        let res = levenberg_marquardt(
            |x| Some(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]),
            &[-1.2, 1.0],
            &LmOptions {
                max_iter: 200,
                ..LmOptions::default()
            },
        );
        assert!(res.gap < 1e-10, "{:?}", res);
        assert!((res.x[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn circle_intersection() {
        let res = levenberg_marquardt(
            |x| Some(vec![x[0].cos() * 2.0 - 0.0, x[0].sin() * 2.0 - 2.0]),
            &[1.0],
            &LmOptions::default(),
        );
        assert!((res.x[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
    }
}
