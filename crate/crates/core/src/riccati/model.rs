//! Closed-form model solutions.
//!
//! Everything is written over a tiny forward-mode dual number so the exact
//! time derivative is available for residual checks. The functions
//! `2 − 2cos x − x sin x`, `1 − cos x` and `sin x − x cos x` cancel
//! catastrophically for small `x`; they switch to their Taylor series below
//! `x = 0.5`.

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::numerics::{find_root, find_root_scan, Mat};

/// Value and first derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn var(v: f64) -> Self {
        Self { v, d: 1.0 }
    }
    pub fn cst(v: f64) -> Self {
        Self { v, d: 0.0 }
    }
    pub fn sin(self) -> Self {
        Self {
            v: self.v.sin(),
            d: self.d * self.v.cos(),
        }
    }
    pub fn cos(self) -> Self {
        Self {
            v: self.v.cos(),
            d: -self.d * self.v.sin(),
        }
    }
    pub fn powi(self, k: i32) -> Self {
        if k == 0 {
            return Self::cst(1.0);
        }
        Self {
            v: self.v.powi(k),
            d: k as f64 * self.v.powi(k - 1) * self.d,
        }
    }
    pub fn recip(self) -> Self {
        Self {
            v: 1.0 / self.v,
            d: -self.d / (self.v * self.v),
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}
impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}
impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
        }
    }
}
impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        self * o.recip()
    }
}
impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { v: -self.v, d: -self.d }
    }
}
impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, o: f64) -> Dual {
        Dual { v: self.v * o, d: self.d * o }
    }
}
impl Add<f64> for Dual {
    type Output = Dual;
    fn add(self, o: f64) -> Dual {
        Dual { v: self.v + o, d: self.d }
    }
}

const SERIES_CUTOFF: f64 = 0.5;
const SERIES_TERMS: usize = 14;

/// `Σ_j coef(j) x^{2j+shift}` for `j = start..start+SERIES_TERMS`.
fn even_series(x: Dual, start: usize, shift: i32, coef: impl Fn(usize) -> f64) -> Dual {
    let mut acc = Dual::cst(0.0);
    for j in start..start + SERIES_TERMS {
        acc = acc + x.powi(2 * j as i32 + shift) * coef(j);
    }
    acc
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `2 − 2cos x − x sin x`.
pub fn s_fn(x: Dual) -> Dual {
    if x.v.abs() < SERIES_CUTOFF {
        // Σ_{j≥2} (−1)^{j+1} (2 − 2j)/(2j)! x^{2j}
        even_series(x, 2, 0, |j| {
            let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
            sign * (2.0 - 2.0 * j as f64) / factorial(2 * j)
        })
    } else {
        -(x.cos() * 2.0) + 2.0 - x * x.sin()
    }
}

/// `1 − cos x`.
fn one_minus_cos(x: Dual) -> Dual {
    if x.v.abs() < SERIES_CUTOFF {
        even_series(x, 1, 0, |j| {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            sign / factorial(2 * j)
        })
    } else {
        -x.cos() + 1.0
    }
}

/// `sin x − x cos x`.
fn sin_minus_xcos(x: Dual) -> Dual {
    if x.v.abs() < SERIES_CUTOFF {
        // Σ_{j≥1} (−1)^{j+1} 2j/(2j+1)! x^{2j+1}
        even_series(x, 1, 1, |j| {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            sign * 2.0 * j as f64 / factorial(2 * j + 1)
        })
    } else {
        x.sin() - x * x.cos()
    }
}

/// Comparison-model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub k1: f64,
    pub k2: f64,
    pub a: f64,
    pub n: usize,
}

impl ModelParams {
    pub fn new(k1: f64, k2: f64, a: f64, n: usize) -> Result<Self> {
        if !(k1 > 0.0 && k1.is_finite()) || !(k2 >= 0.0 && k2.is_finite()) || !a.is_finite() || n < 1 {
            return Err(Error::InvalidParameter(format!(
                "model parameters need k1 > 0, k2 ≥ 0, n ≥ 1 (got k1={k1}, k2={k2}, a={a}, n={n})"
            )));
        }
        Ok(Self { k1, k2, a, n })
    }

    /// The matched setting `k₂ = √(2n−2)·k₁/2`.
    pub fn matched(k1: f64, a: f64, n: usize) -> Result<Self> {
        Self::new(k1, (2.0 * n as f64 - 2.0).sqrt() * k1 / 2.0, a, n)
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.k1 + self.a * self.a).sqrt()
    }

    /// `c = k₂/√(2n−2)` (undefined for `n = 1`).
    pub fn c(&self) -> Option<f64> {
        (self.n >= 2).then(|| self.k2 / (2.0 * self.n as f64 - 2.0).sqrt())
    }

    /// Blow-up time `2π/c₁` of `S̄₀`.
    pub fn s0_blowup(&self) -> f64 {
        2.0 * PI / self.c1()
    }
}

fn s0_dual(p: &ModelParams, t: Dual) -> [[Dual; 3]; 3] {
    let c1 = p.c1();
    let a = p.a;
    let x = t * c1;
    let s = s_fn(x);
    let omc = one_minus_cos(x);
    let xs = x * x.sin();
    let e00 = (omc * (2.0 * a * a) + xs * (p.k1 * p.k1)) / (t * s);
    let e01 = t.recip() * a;
    let e02 = (omc * (2.0 * (c1 * c1 - 1.0)) + xs) / (s * 2.0);
    let e11 = t.recip();
    let e12 = Dual::cst(a / 2.0);
    let e22 = sin_minus_xcos(x) * c1 / s;
    [[e00, e01, e02], [e01, e11, e12], [e02, e12, e22]]
}

fn check_window(t: f64, end: f64, what: &str) -> Result<()> {
    if !(t > 0.0 && t < end) {
        return Err(Error::InvalidParameter(format!(
            "{what} is defined for 0 < t < {end}, got t = {t}"
        )));
    }
    Ok(())
}

/// `S̄₀(t)` and its exact time derivative.
pub fn sbar0_with_derivative(p: &ModelParams, t: f64) -> Result<(Mat, Mat)> {
    check_window(t, p.s0_blowup(), "S̄₀")?;
    let e = s0_dual(p, Dual::var(t));
    Ok((Mat::from_fn(3, 3, |i, j| e[i][j].v), Mat::from_fn(3, 3, |i, j| e[i][j].d)))
}

pub fn sbar0(p: &ModelParams, t: f64) -> Result<Mat> {
    sbar0_with_derivative(p, t).map(|x| x.0)
}

/// The small-`t` asymptotic form of `S̄₀`.
pub fn sbar0_asymptotic(a: f64, t: f64) -> Mat {
    Mat::from_row_slice(
        3,
        3,
        &[
            12.0 / t.powi(3),
            a / t,
            6.0 / (t * t),
            a / t,
            1.0 / t,
            a / 2.0,
            6.0 / (t * t),
            a / 2.0,
            4.0 / t,
        ],
    )
}

/// `W₀'` of the holomorphic comparison equation.
pub fn w0_prime(a: f64) -> Mat {
    Mat::from_row_slice(3, 3, &[0.0, 0.0, -0.5, 0.0, 0.0, a / 2.0, 1.0, -a / 2.0, 0.0])
}

/// `L̄₀'` of the holomorphic comparison equation.
pub fn lbar0_prime(p: &ModelParams) -> Mat {
    let a = p.a;
    Mat::from_row_slice(
        3,
        3,
        &[
            0.25,
            -a / 4.0,
            0.0,
            -a / 4.0,
            a * a / 4.0,
            0.0,
            0.0,
            0.0,
            p.k1 * p.k1 - 1.0 + a * a / 4.0,
        ],
    )
}

/// `C̄₃ = diag(0, 1, 1)`.
pub fn cbar3() -> Mat {
    Mat::from_diagonal(&crate::numerics::Vector::from_vec(vec![0.0, 1.0, 1.0]))
}

/// Entrywise residual of `S̄₀` in
/// `0 = S̄₀' − W₀'S̄₀ − S̄₀W₀'ᵀ + S̄₀C̄₃S̄₀ + L̄₀'`.
pub fn comparison_residual(p: &ModelParams, t: f64) -> Result<Mat> {
    let (s, ds) = sbar0_with_derivative(p, t)?;
    let w = w0_prime(p.a);
    Ok(&ds - &w * &s - &s * w.transpose() + &s * cbar3() * &s + lbar0_prime(p))
}

/// `s̄(t) = √(2n−2)·k₂·cot(k₂t/√(2n−2))`.
pub fn sbar_trace(p: &ModelParams, t: f64) -> Result<f64> {
    let c = p
        .c()
        .ok_or_else(|| Error::NotApplicable("the trace comparison needs n ≥ 2".into()))?;
    check_window(t, PI / c, "s̄")?;
    let r = (2.0 * p.n as f64 - 2.0).sqrt();
    Ok(r * p.k2 / (c * t).tan())
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x.powi(4) / 120.0
    } else {
        x.sin() / x
    }
}

/// Closed-orbit model `S̄(t)` (`2n × 2n`, frame `ξ, Jγ̇, e₃ …`).
pub fn sbar_orbit(p: &ModelParams, t: f64) -> Result<Mat> {
    check_window(t, PI / p.k1, "S̄")?;
    let d = 2 * p.n;
    let mut s = Mat::zeros(d, d);
    s[(0, 1)] = -0.5;
    s[(1, 0)] = -0.5;
    s[(1, 1)] = p.k1 / (p.k1 * t).tan();
    if let Some(c) = p.c() {
        for i in 2..d {
            s[(i, i)] = c / (c * t).tan();
        }
    }
    Ok(s)
}

/// Closed-orbit model transport matrix `Ā`.
pub fn abar_orbit(n: usize) -> Mat {
    let mut a = Mat::zeros(2 * n, 2 * n);
    a[(0, 1)] = -0.5;
    a[(1, 0)] = 0.5;
    a
}

/// Closed-orbit model Jacobi matrix `B̄(t)`.
pub fn bbar(p: &ModelParams, t: f64) -> Mat {
    let d = 2 * p.n;
    let k = p.k1;
    let mut b = Mat::zeros(d, d);
    b[(0, 0)] = 1.0;
    let x = k * t;
    b[(1, 0)] = if x.abs() < 1e-4 {
        -(t / 2.0) * (1.0 - x * x / 12.0)
    } else {
        -(1.0 - x.cos()) / (k * k * t)
    };
    b[(1, 1)] = sinc(x);
    if let Some(c) = p.c() {
        for i in 2..d {
            b[(i, i)] = sinc(c * t);
        }
    }
    b
}

/// `det B̄(t) = sinc(k₁t)·sinc(ct)^{2n−2}`.
pub fn det_bbar(p: &ModelParams, t: f64) -> f64 {
    let lower = p.c().map_or(1.0, |c| sinc(c * t).powi(2 * p.n as i32 - 2));
    sinc(p.k1 * t) * lower
}

/// All closed forms at one time.
#[derive(Debug, Clone)]
pub struct ModelSolutions {
    pub s0: Option<Mat>,
    pub s_trace: Option<f64>,
    pub b: Mat,
    pub det_b: f64,
}

pub fn model_solutions(p: &ModelParams, t: f64) -> Result<ModelSolutions> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    Ok(ModelSolutions {
        s0: sbar0(p, t).ok(),
        s_trace: sbar_trace(p, t).ok(),
        b: bbar(p, t),
        det_b: det_bbar(p, t),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupMode {
    /// First zero of `s(c₁t)` (blow-up of `S̄₀`).
    Holomorphic,
    /// First zero of `sin(k₂t/√(2n−2))` (blow-up of `s̄`).
    Trace,
    /// First zero of `det B̄`.
    Jacobi,
}

/// First blow-up / degeneration time of a closed form, located by root
/// finding (not read off the formulas).
pub fn first_blowup_time(p: &ModelParams, mode: BlowupMode) -> Result<f64> {
    let tol = 1e-14;
    match mode {
        BlowupMode::Holomorphic => {
            let c1 = p.c1();
            // s(x) ~ x⁴/12 > 0 near 0; its first positive zero is the blow-up.
            let f = |t: f64| s_fn(Dual::cst(c1 * t)).v;
            Ok(find_root_scan(f, PI / c1, 3.0 * PI / c1, tol, 256)?)
        }
        BlowupMode::Trace => {
            let c = p
                .c()
                .ok_or_else(|| Error::NotApplicable("the trace comparison needs n ≥ 2".into()))?;
            if c <= 0.0 {
                return Err(Error::NotApplicable("k2 = 0 gives no blow-up".into()));
            }
            Ok(find_root(|t| (c * t).sin(), 0.5 * PI / c, 1.5 * PI / c, tol)?)
        }
        BlowupMode::Jacobi => {
            let span = p.c().map_or(2.0 * PI / p.k1, |c| (PI / c).max(PI / p.k1)) * 1.5;
            Ok(find_root(|t| det_bbar(p, t), 1e-6, span, tol)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_match_direct_formulas_in_the_overlap() {
        for x in [0.3, 0.45, 0.49] {
            let d = Dual::cst(x);
            let s_direct = 2.0 - 2.0 * x.cos() - x * x.sin();
            assert!((s_fn(d).v - s_direct).abs() < 1e-15);
            assert!((one_minus_cos(d).v - (1.0 - x.cos())).abs() < 1e-16);
            assert!((sin_minus_xcos(d).v - (x.sin() - x * x.cos())).abs() < 1e-16);
        }
    }

    #[test]
    fn dual_derivative_matches_finite_difference() {
        let p = ModelParams::new(1.0, 0.0, 0.7, 1).unwrap();
        let t = 1.3;
        let (_, ds) = sbar0_with_derivative(&p, t).unwrap();
        let h = 1e-6;
        let fd = (sbar0(&p, t + h).unwrap() - sbar0(&p, t - h).unwrap()) / (2.0 * h);
        assert!((ds - fd).amax() < 1e-6);
    }

    #[test]
    fn sbar0_at_pi() {
        // k₁ = 1, a = 0: x = π, s = 4, sin x − x cos x = π.
        let p = ModelParams::new(1.0, 0.0, 0.0, 1).unwrap();
        let s = sbar0(&p, PI).unwrap();
        let want = Mat::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 1.0 / PI, 0.0, 0.0, 0.0, PI / 4.0]);
        assert!((s - want).amax() < 1e-14);
    }

    #[test]
    fn trace_model_vanishes_at_quarter_period() {
        let p = ModelParams::new(1.0, 2f64.sqrt() / 2.0, 0.0, 2).unwrap();
        assert!(sbar_trace(&p, PI).unwrap().abs() < 1e-15);
    }

    #[test]
    fn det_b_tends_to_one() {
        let p = ModelParams::new(1.0, 0.0, 0.0, 1).unwrap();
        assert!((det_bbar(&p, 1e-9) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn blowup_times() {
        let p = ModelParams::new(1.0, 2f64.sqrt() / 2.0, 0.0, 2).unwrap();
        assert!((first_blowup_time(&p, BlowupMode::Holomorphic).unwrap() - 2.0 * PI).abs() < 1e-9);
        assert!((first_blowup_time(&p, BlowupMode::Trace).unwrap() - 2.0 * PI).abs() < 1e-9);
        let p1 = ModelParams::new(1.0, 0.0, 0.0, 1).unwrap();
        assert!((first_blowup_time(&p1, BlowupMode::Jacobi).unwrap() - PI).abs() < 1e-9);
    }

    #[test]
    fn outside_the_window_is_rejected() {
        let p = ModelParams::new(1.0, 0.0, 0.0, 1).unwrap();
        assert!(sbar0(&p, 0.0).is_err());
        assert!(sbar0(&p, 2.0 * PI).is_err());
    }
}
