//! Scalar root finding and minimisation.

use super::NumericsError;

/// Number of sub-intervals scanned for the first sign change.
pub const DEFAULT_SCAN: usize = 64;

/// Brent's method on a bracket with `f(a)·f(b) ≤ 0`.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, NumericsError> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if !(fa.is_finite() && fb.is_finite()) {
        return Err(NumericsError::InvalidInput("non-finite bracket values".into()));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(NumericsError::NoBracket { a, b });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(NumericsError::InvalidInput("non-finite function value".into()));
        }
    }
    Err(NumericsError::NoConvergence("brent root".into()))
}

/// First root of `f` in `[a, b]`.
///
/// The interval is scanned on `DEFAULT_SCAN` equal pieces and the first piece
/// with a sign change (or exact zero) is refined by Brent's method. This finds
/// roots even when the end-point values share a sign.
pub fn find_root<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, NumericsError> {
    find_root_scan(f, a, b, tol, DEFAULT_SCAN)
}

pub fn find_root_scan<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    pieces: usize,
) -> Result<f64, NumericsError> {
    if !(a.is_finite() && b.is_finite()) || b <= a || pieces == 0 {
        return Err(NumericsError::InvalidInput(format!("bad interval [{a}, {b}]")));
    }
    let mut x0 = a;
    let mut f0 = f(x0);
    if f0 == 0.0 {
        return Ok(x0);
    }
    for k in 1..=pieces {
        let x1 = a + (b - a) * k as f64 / pieces as f64;
        let f1 = f(x1);
        if f1 == 0.0 {
            return Ok(x1);
        }
        if f0.is_finite() && f1.is_finite() && f0.signum() != f1.signum() {
            return brent(&mut f, x0, x1, tol);
        }
        x0 = x1;
        f0 = f1;
    }
    Err(NumericsError::NoBracket { a, b })
}

/// Brent's parabolic/golden-section minimisation on `[a, b]`; returns `(x, f(x))`.
pub fn minimize_scalar<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const CGOLD: f64 = 0.381_966_011_250_105;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..500 {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-14;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if !(p.abs() >= (0.5 * q * etemp).abs() || p <= q * (a - x) || p >= q * (b - x)) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cosine_root() {
        let r = find_root(f64::cos, 0.0, 3.0, 1e-14).unwrap();
        assert!((r - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn first_root_with_equal_endpoint_signs() {
        // Both end values equal 4; the first interior root is 2π.
        let f = |t: f64| 2.0 - 2.0 * t.cos() - t * t.sin();
        let r = find_root(f, PI, 3.0 * PI, 1e-13).unwrap();
        assert!((r - 2.0 * PI).abs() < 1e-9, "{r}");
    }

    #[test]
    fn no_root_is_an_error() {
        let r = find_root(|t| t * t + 1.0, -1.0, 1.0, 1e-12);
        assert!(matches!(r, Err(NumericsError::NoBracket { .. })));
    }

    #[test]
    fn minimise_parabola() {
        let (x, fx) = minimize_scalar(|x| (x - 0.3).powi(2) + 1.0, -2.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-12);
    }
}
