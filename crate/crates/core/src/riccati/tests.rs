use super::*;
use crate::geodesics::{horizontal_basis, integrate_geodesic_with, GeodesicOptions};
use crate::manifolds::Manifold;
use crate::numerics::{loewner_le, rng_for, Vector};
use proptest::prelude::*;
use std::f64::consts::PI;

fn framed(m: &Manifold, p: &Vector, v: &Vector, a: f64, t_max: f64) -> GeodesicRecord {
    integrate_geodesic_with(m, p, v, a, t_max, &GeodesicOptions::with_frame()).unwrap()
}

fn random_start(m: &Manifold, seed: u64) -> (Vector, Vector) {
    let mut rng = rng_for(seed, 0);
    let p = m.sample_point(&mut rng);
    let w = m.sample_point(&mut rng_for(seed, 1));
    let h = if m.is_contact() { m.horizontal(&p, &w) } else { m.tangent_project(&p, &w) };
    let v = &h / m.norm(&p, &h);
    (p, v)
}

fn grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| a + (b - a) * i as f64 / n as f64)
}

#[test]
fn closed_form_solves_the_comparison_equation() {
    for (k1, a) in [(1.0, 0.0), (1.0, 1.0), (2.0, 0.5)] {
        let p = ModelParams::new(k1, 0.0, a, 1).unwrap();
        let tb = first_blowup_time(&p, BlowupMode::Holomorphic).unwrap();
        for t in grid(0.05, 0.95 * tb, 400) {
            let r = model::comparison_residual(&p, t).unwrap();
            assert!(r.amax() <= 1e-8, "k1={k1} a={a} t={t}: residual {:.3e}", r.amax());
        }
    }
}

#[test]
fn small_time_asymptotics() {
    for (k1, a) in [(1.0, 0.0), (1.0, 1.0), (2.0, 0.5)] {
        let p = ModelParams::new(k1, 0.0, a, 1).unwrap();
        let t = 1e-3;
        let s = sbar0(&p, t).unwrap();
        let want = sbar0_asymptotic(a, t);
        for i in 0..3 {
            for j in 0..3 {
                let tol = 0.01 * want[(i, j)].abs() + 1e-12;
                assert!((s[(i, j)] - want[(i, j)]).abs() <= tol, "({i},{j}) {} vs {}", s[(i, j)], want[(i, j)]);
            }
        }
    }
}

#[test]
fn log_det_b_derivative_is_trace_of_s() {
    // d/dt log det B̄ = tr S̄ − (2n−1)/t (the skew A drops out of the trace).
    let p = ModelParams::matched(1.0, 0.0, 2).unwrap();
    for t in grid(0.2, 2.8, 20) {
        let h = 1e-5;
        let dl = (det_bbar(&p, t + h).ln() - det_bbar(&p, t - h).ln()) / (2.0 * h);
        let tr = sbar_orbit(&p, t).unwrap().trace() - 3.0 / t;
        assert!((dl - tr).abs() < 1e-7, "t={t}: {dl} vs {tr}");
    }
}

#[test]
fn frame_equation_on_the_model_matches_closed_form() {
    let m = Manifold::hopf(1.0, 1, 1).unwrap();
    let p = m.origin();
    let v = horizontal_basis(&m, &p)[0].clone();
    for a in [0.0, 0.7] {
        let rec = framed(&m, &p, &v, a, 3.0);
        let mp = ModelParams::new(1.0, 0.0, a, 1).unwrap();
        let t0 = 0.1;
        let tr = integrate_riccati_s1(&rec, &sbar0(&mp, t0).unwrap(), t0, 3.0).unwrap();
        assert!(tr.blowup_time.is_none());
        for t in grid(t0, 3.0, 58) {
            let err = (tr.eval(t) - sbar0(&mp, t).unwrap()).amax();
            assert!(err < 1e-6, "a={a} t={t}: {err:.3e}");
        }
    }
}

#[test]
fn synthetic_zero_coefficients() {
    let c = c3(3);
    let s0 = Mat::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.5, 0.2, -0.1, 0.2, 1.0]);
    let t0 = 0.5;
    let tr = integrate_matrix_riccati(RiccatiMode::Synthetic, &s0, t0, 4.0, |_, s| -(s * &c * s)).unwrap();
    let inv0 = s0.clone().try_inverse().unwrap();
    for t in grid(t0, 4.0, 35) {
        let want = (&inv0 + &c * (t - t0)).try_inverse().unwrap();
        assert!((tr.eval(t) - want).amax() < 1e-8, "t={t}");
    }
}

#[test]
fn scalar_cot_blows_up_at_pi() {
    let t0: f64 = 0.1;
    let s0 = Mat::from_element(1, 1, 1.0 / t0.tan());
    let tr = integrate_matrix_riccati(RiccatiMode::Synthetic, &s0, t0, 4.0, |_, s| {
        Mat::from_element(1, 1, -(1.0 + s[(0, 0)] * s[(0, 0)]))
    })
    .unwrap();
    for t in grid(t0, 3.0, 29) {
        assert!((tr.scalar(t) - 1.0 / t.tan()).abs() < 1e-8);
    }
    assert!((tr.blowup_time.unwrap() - PI).abs() < 1e-6);
}

#[test]
fn heisenberg_does_not_blow_up() {
    let m = Manifold::heisenberg();
    for seed in 0..3 {
        let (p, v) = random_start(&m, seed);
        let rec = framed(&m, &p, &v, 0.0, 20.0);
        let t0 = SINGULAR_T0;
        let tr = integrate_riccati_s1(&rec, &s1_initial(3, 0.0, t0), t0, 20.0).unwrap();
        assert!(tr.blowup_time.is_none(), "seed {seed}");
        assert!((tr.t_end() - 20.0).abs() < 1e-12);
    }
}

#[test]
fn holomorphic_block_blows_up_at_two_pi_on_the_model() {
    let m = Manifold::hopf(1.0, 1, 1).unwrap();
    let (p, v) = random_start(&m, 11);
    let rec = framed(&m, &p, &v, 0.0, 7.0);
    let tr = integrate_riccati_holomorphic(&rec, SINGULAR_T0, 7.0).unwrap();
    let tb = tr.blowup_time.unwrap();
    assert!((tb - 2.0 * PI).abs() < 1e-6, "{tb}");
}

#[test]
fn trace_block_blows_up_at_two_pi_on_the_model() {
    let m = Manifold::hopf(1.0, 1, 2).unwrap();
    let (p, v) = random_start(&m, 12);
    for a in [0.0f64, 0.5] {
        let rec = framed(&m, &p, &v, a, 7.0);
        let tr = integrate_riccati_trace(&rec, SINGULAR_T0, 7.0).unwrap();
        let tb = tr.blowup_time.unwrap();
        // The a²/4 shift raises the effective transverse curvature to ¼ + a²/4.
        let want = PI / (0.25 + a * a / 4.0).sqrt();
        assert!((tb - want).abs() < 1e-6 && tb <= 2.0 * PI + 1e-6, "a={a}: {tb}");
    }
}

#[test]
fn closed_orbit_solution_matches_model() {
    let m = Manifold::hopf(1.0, 1, 1).unwrap();
    let p = m.origin();
    let v = horizontal_basis(&m, &p)[0].clone();
    let rec = framed(&m, &p, &v, 0.0, 3.0);
    let tr = integrate_riccati_orbit(&rec, SINGULAR_T0, 3.0).unwrap();
    let mp = ModelParams::matched(1.0, 0.0, 1).unwrap();
    for t in grid(0.1, 3.0, 29) {
        let s = tr.eval(t);
        assert!((&s - sbar_orbit(&mp, t).unwrap()).amax() < 1e-6, "t={t}");
        let (s0, _, _) = orbit_blocks(&s);
        assert!(s0[(0, 0)].abs() < 1e-7 && (s0[(0, 1)] + 0.5).abs() < 1e-7);
    }
}

#[test]
fn closed_orbit_lower_block_trace() {
    let m = Manifold::hopf(1.0, 1, 2).unwrap();
    let (p, v) = random_start(&m, 5);
    let rec = framed(&m, &p, &v, 0.0, 3.0);
    let tr = integrate_riccati_orbit(&rec, SINGULAR_T0, 3.0).unwrap();
    for t in grid(0.1, 3.0, 29) {
        let (_, s1, s2) = orbit_blocks(&tr.eval(t));
        let want = 2.0 * 0.5 / (0.5 * t).tan();
        assert!((s2.trace() - want).abs() < 1e-6, "t={t}");
        assert!(s1.amax() < 1e-6);
    }
}

#[test]
fn jacobi_matrix_matches_model() {
    for n in [1, 2] {
        let m = Manifold::hopf(1.0, 1, n).unwrap();
        let (p, v) = random_start(&m, 21 + n as u64);
        let times: Vec<f64> = grid(0.05, 3.0, 30).collect();
        let oj = orbit_jacobi(&m, &p, &v, &times).unwrap();
        let mp = ModelParams::matched(1.0, 0.0, n).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let err = (&oj.b[i] - bbar(&mp, t)).amax();
            assert!(err < 1e-6, "n={n} t={t}: {err:.3e}\n{}{}", oj.b[i], bbar(&mp, t));
            let s = oj.s[i].as_ref().unwrap();
            assert!((s - sbar_orbit(&mp, t).unwrap()).amax() < 1e-5, "n={n} t={t}");
            let want = t.powi(2 * n as i32 - 1) * det_bbar(&mp, t);
            assert!((oj.density[i] - want).abs() < 1e-6, "density at t={t}");
        }
    }
}

#[test]
fn symplectic_conjugate_times() {
    for (k, n, want) in [(1.0, 2, PI), (2.0, 1, PI / 2.0)] {
        let m = Manifold::base(k, n).unwrap();
        let (p, v) = random_start(&m, 31);
        let rec = framed(&m, &p, &v, 0.0, 1.2 * want);
        let b = integrate_symplectic_block(&rec, SINGULAR_T0, 1.2 * want).unwrap();
        assert!((b.blowup_time.unwrap() - want).abs() < 1e-4);
        let full = integrate_riccati_symplectic(&rec, SINGULAR_T0, 1.2 * want).unwrap();
        assert!((full.blowup_time.unwrap() - want).abs() < 1e-4);
    }
    let m = Manifold::base(1.0, 2).unwrap();
    let (p, v) = random_start(&m, 32);
    let rec = framed(&m, &p, &v, 0.0, 7.0);
    let tr = integrate_symplectic_trace(&rec, SINGULAR_T0, 7.0).unwrap();
    assert!((tr.blowup_time.unwrap() - 2.0 * PI).abs() < 1e-3);
}

#[test]
fn loewner_order_is_preserved() {
    let m = Manifold::hopf(1.0, 1, 1).unwrap();
    let p = m.origin();
    let v = horizontal_basis(&m, &p)[1].clone();
    let rec = framed(&m, &p, &v, 0.3, 3.0);
    let mp = ModelParams::new(1.0, 0.0, 0.3, 1).unwrap();
    let t0 = 0.2;
    let sb = sbar0(&mp, t0).unwrap();
    let below = &sb - Mat::identity(3, 3) * 0.05;
    let tr = integrate_riccati_s1(&rec, &below, t0, 3.0).unwrap();
    for t in grid(t0, 3.0, 40) {
        assert!(loewner_le(&tr.eval(t), &sbar0(&mp, t).unwrap()), "t={t}");
    }
}

#[test]
fn wrong_inputs_are_rejected() {
    let m = Manifold::hopf(1.0, 1, 1).unwrap();
    let p = m.origin();
    let v = horizontal_basis(&m, &p)[0].clone();
    let unframed = integrate_geodesic_with(&m, &p, &v, 0.0, 1.0, &GeodesicOptions::default()).unwrap();
    assert!(integrate_riccati_s1(&unframed, &s1_initial(3, 0.0, 0.1), 0.1, 1.0).is_err());
    let rec = framed(&m, &p, &v, 0.0, 1.0);
    let asym = Mat::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    assert!(integrate_riccati_s1(&rec, &asym, 0.1, 1.0).is_err());
    assert!(integrate_riccati_s1(&rec, &s1_initial(3, 0.0, 0.1), 0.1, 2.0).is_err());
    assert!(integrate_riccati_trace(&rec, 0.1, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn residual_vanishes_for_random_parameters(k1 in 0.3f64..3.0, a in -2.0f64..2.0, u in 0.02f64..0.95) {
        let p = ModelParams::new(k1, 0.0, a, 1).unwrap();
        let t = u * p.s0_blowup();
        let s = sbar0(&p, t).unwrap();
        let r = model::comparison_residual(&p, t).unwrap();
        prop_assert!(r.amax() <= 1e-9 * (1.0 + s.amax().powi(2)));
        prop_assert!((&s - s.transpose()).amax() == 0.0);
    }
}
