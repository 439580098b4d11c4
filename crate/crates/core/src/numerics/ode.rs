//! Adaptive Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! Tolerances are mixed absolute/relative per component. A step that would
//! have to shrink below `h_min` ends the run with [`OdeStatus::StepUnderflow`];
//! the trajectory up to the last accepted time is kept so callers that use
//! underflow as a blow-up signal can still read it.

use super::NumericsError;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Hairer's continuous extension coefficients for the fourth-order interpolant.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Keep the interpolation data of every accepted step.
    pub dense: bool,
    /// Scale the relative tolerance by `max |yᵢ|` instead of per component
    /// (for matrix equations whose entries differ by many orders).
    pub global_scale: bool,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_min: 1e-13,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
            dense: true,
            global_scale: false,
        }
    }
}

impl OdeOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn sparse(mut self) -> Self {
        self.dense = false;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeStatus {
    Completed,
    /// The stop predicate fired after the last accepted step.
    Stopped,
    StepUnderflow,
}

#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub status: OdeStatus,
    pub rejected: usize,
    segments: Vec<Segment>,
}

impl OdeSolution {
    pub fn t_last(&self) -> f64 {
        *self.times.last().expect("solution has at least the initial point")
    }

    pub fn y_last(&self) -> &[f64] {
        self.states.last().expect("solution has at least the initial point")
    }

    pub fn is_complete(&self) -> bool {
        self.status == OdeStatus::Completed
    }

    pub fn require_complete(self) -> Result<Self, NumericsError> {
        match self.status {
            OdeStatus::StepUnderflow => Err(NumericsError::StepUnderflow {
                t_last: self.t_last(),
            }),
            _ => Ok(self),
        }
    }

    pub fn has_dense(&self) -> bool {
        !self.segments.is_empty() || self.times.len() == 1
    }

    /// Interpolated state at `t`, clamped to the integrated range.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        assert!(self.has_dense(), "dense output was not recorded");
        if self.segments.is_empty() {
            return self.states[0].clone();
        }
        let forward = self.segments[0].h > 0.0;
        let key = |s: &Segment| if forward { s.t0 } else { -s.t0 };
        let tt = if forward { t } else { -t };
        let idx = self
            .segments
            .partition_point(|s| key(s) <= tt)
            .saturating_sub(1);
        let seg = &self.segments[idx];
        let theta = ((t - seg.t0) / seg.h).clamp(0.0, 1.0);
        let th1 = 1.0 - theta;
        (0..seg.r[0].len())
            .map(|i| {
                seg.r[0][i]
                    + theta
                        * (seg.r[1][i]
                            + th1 * (seg.r[2][i] + theta * (seg.r[3][i] + th1 * seg.r[4][i])))
            })
            .collect()
    }
}

fn err_norm(y0: &[f64], y1: &[f64], e: &[f64], opts: &OdeOptions) -> f64 {
    let big = if opts.global_scale {
        y0.iter().chain(y1).fold(0.0f64, |a, y| a.max(y.abs()))
    } else {
        0.0
    };
    let mut acc = 0.0;
    for i in 0..y0.len() {
        let sc = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs()).max(big);
        let r = e[i] / sc;
        acc += r * r;
    }
    let v = (acc / y0.len().max(1) as f64).sqrt();
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

fn initial_step<F>(rhs: &mut F, t0: f64, y0: &[f64], f0: &[f64], dir: f64, opts: &OdeOptions) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let big = if opts.global_scale { y0.iter().fold(0.0f64, |a, y| a.max(y.abs())) } else { 0.0 };
    let sc: Vec<f64> = y0.iter().map(|y| opts.atol + opts.rtol * y.abs().max(big)).collect();
    let rms = |v: &[f64]| {
        (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(opts.h_max);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + dir * h0 * f).collect();
    let mut f1 = vec![0.0; n];
    rhs(t0 + dir * h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.h_max)
}

/// Integrate `y' = rhs(t, y)` from `t0` to `t1` (either direction).
///
/// `stop(t, y)` is consulted after every accepted step; returning `true` ends
/// the run with [`OdeStatus::Stopped`].
pub fn integrate<F, S>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
    mut stop: S,
) -> Result<OdeSolution, NumericsError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(f64, &[f64]) -> bool,
{
    if !(opts.rtol > 0.0 && opts.atol >= 0.0) {
        return Err(NumericsError::InvalidInput(
            "tolerances must be positive".into(),
        ));
    }
    if y0.iter().any(|v| !v.is_finite()) || !t0.is_finite() || !t1.is_finite() {
        return Err(NumericsError::InvalidInput("non-finite initial data".into()));
    }
    let n = y0.len();
    let mut sol = OdeSolution {
        times: vec![t0],
        states: vec![y0.to_vec()],
        status: OdeStatus::Completed,
        rejected: 0,
        segments: Vec::new(),
    };
    if t1 == t0 {
        return Ok(sol);
    }
    let dir = (t1 - t0).signum();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    rhs(t, &y, &mut k1);
    let mut h = match opts.h_init {
        Some(h) => h.abs(),
        None => initial_step(&mut rhs, t0, y0, &k1, dir, opts),
    };
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let mut yt = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut steps = 0usize;
    let mut last_rejected = false;

    loop {
        let remaining = (t1 - t).abs();
        if remaining <= 1e-14 * t1.abs().max(1.0) {
            break;
        }
        if steps >= opts.max_steps {
            return Err(NumericsError::MaxSteps { t_last: t });
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h < opts.h_min {
            sol.status = OdeStatus::StepUnderflow;
            return Ok(sol);
        }
        let hs = dir * h;

        for i in 0..n {
            yt[i] = y[i] + hs * A21 * k1[i];
        }
        rhs(t + C2 * hs, &yt, &mut k2);
        for i in 0..n {
            yt[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * hs, &yt, &mut k3);
        for i in 0..n {
            yt[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * hs, &yt, &mut k4);
        for i in 0..n {
            yt[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * hs, &yt, &mut k5);
        for i in 0..n {
            yt[i] = y[i]
                + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + hs, &yt, &mut k6);
        for i in 0..n {
            y1[i] = y[i]
                + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t + hs, &y1, &mut k7);
        for i in 0..n {
            e[i] = hs
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = if y1.iter().chain(k7.iter()).all(|v| v.is_finite()) {
            err_norm(&y, &y1, &e, opts)
        } else {
            f64::INFINITY
        };
        steps += 1;

        if err <= 1.0 {
            if opts.dense {
                let mut r = [
                    y.clone(),
                    vec![0.0; n],
                    vec![0.0; n],
                    vec![0.0; n],
                    vec![0.0; n],
                ];
                for i in 0..n {
                    let ydiff = y1[i] - y[i];
                    let bspl = hs * k1[i] - ydiff;
                    r[1][i] = ydiff;
                    r[2][i] = bspl;
                    r[3][i] = ydiff - hs * k7[i] - bspl;
                    r[4][i] = hs
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                sol.segments.push(Segment { t0: t, h: hs, r });
            }
            t = if last { t1 } else { t + hs };
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);
            sol.times.push(t);
            sol.states.push(y.clone());
            if stop(t, &y) {
                sol.status = OdeStatus::Stopped;
                return Ok(sol);
            }
            if last {
                break;
            }
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(opts.h_max);
            last_rejected = false;
        } else {
            sol.rejected += 1;
            last_rejected = true;
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= fac;
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn never(_: f64, _: &[f64]) -> bool {
        false
    }

    #[test]
    fn exponential_growth_matches_closed_form() {
        let sol = integrate(
            |_, y, dy| dy[0] = y[0],
            0.0,
            &[1.0],
            1.0,
            &OdeOptions::default(),
            never,
        )
        .unwrap();
        assert!((sol.y_last()[0] - std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let sol = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[0.0, 1.0],
            10.0,
            &OdeOptions::default(),
            never,
        )
        .unwrap();
        for k in 0..=100 {
            let t = 0.1 * k as f64;
            let y = sol.eval(t);
            assert!((y[0] - t.sin()).abs() < 1e-8, "t={t}");
            assert!((y[1] - t.cos()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn backward_integration() {
        let sol = integrate(
            |_, y, dy| dy[0] = -y[0],
            1.0,
            &[1.0],
            0.0,
            &OdeOptions::default(),
            never,
        )
        .unwrap();
        assert!((sol.y_last()[0] - std::f64::consts::E).abs() < 1e-9);
        assert!((sol.eval(0.5)[0] - 0.5f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn finite_time_blowup_underflows() {
        // y' = y^2, y(0) = 1 escapes at t = 1.
        let sol = integrate(
            |_, y, dy| dy[0] = y[0] * y[0],
            0.0,
            &[1.0],
            2.0,
            &OdeOptions::default(),
            never,
        )
        .unwrap();
        assert_eq!(sol.status, OdeStatus::StepUnderflow);
        assert!((sol.t_last() - 1.0).abs() < 1e-6);
        assert!(sol.clone().require_complete().is_err());
    }

    #[test]
    fn stop_predicate_ends_run() {
        let sol = integrate(
            |_, y, dy| dy[0] = y[0] * y[0],
            0.0,
            &[1.0],
            2.0,
            &OdeOptions::default(),
            |_, y| y[0] > 1e8,
        )
        .unwrap();
        assert_eq!(sol.status, OdeStatus::Stopped);
        assert!((sol.t_last() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_tolerances() {
        let opts = OdeOptions::with_tolerances(0.0, 1e-12);
        assert!(integrate(|_, _, _| {}, 0.0, &[1.0], 1.0, &opts, never).is_err());
    }
}
