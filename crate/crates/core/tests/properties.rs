//! Property tests over the public API: seeded reproducibility, integrator
//! accuracy, root-finder residuals, curvature scaling and model invariants.

use std::f64::consts::PI;

use cclab::geodesics::{horizontal_basis, integrate_geodesic, reeb_flow, transport_frame};
use cclab::identities::hypothesis_margins;
use cclab::numerics::{find_root, integrate, rng_for, sphere_sample, Mat, OdeOptions, Vector};
use cclab::riccati::{bbar, det_bbar, first_blowup_time, orbit_jacobi, BlowupMode, ModelParams};
use cclab::Manifold;
use proptest::prelude::*;

fn builtins() -> Vec<Manifold> {
    vec![
        Manifold::hopf(1.0, 1, 1).unwrap(),
        Manifold::hopf(1.5, 2, 1).unwrap(),
        Manifold::hopf(1.0, 1, 2).unwrap(),
        Manifold::heisenberg(),
    ]
}

fn unit_horizontal(m: &Manifold, seed: u64) -> (Vector, Vector) {
    let p = m.sample_point(&mut rng_for(seed, 0));
    let w = m.sample_point(&mut rng_for(seed, 1));
    let h = m.horizontal(&p, &w);
    let v = &h / m.norm(&p, &h);
    (p, v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn linear_ode_matches_matrix_exponential(entries in prop::collection::vec(-1.0f64..1.0, 9), t1 in 0.1f64..2.0) {
        let a = Mat::from_row_slice(3, 3, &entries);
        let y0 = [1.0, -0.5, 0.25];
        let opts = OdeOptions::with_tolerances(1e-11, 1e-13);
        let sol = integrate(
            |_, y, dy| {
                for i in 0..3 {
                    dy[i] = (0..3).map(|j| a[(i, j)] * y[j]).sum();
                }
            },
            0.0, &y0, t1, &opts, |_, _| false,
        ).unwrap();
        let want = (a * t1).exp() * Vector::from_column_slice(&y0);
        for i in 0..3 {
            prop_assert!((sol.y_last()[i] - want[i]).abs() < 1e-8 * (1.0 + want[i].abs()));
        }
    }

    #[test]
    fn root_residual_is_small(shift in -2.0f64..2.0, scale in 0.1f64..10.0) {
        // scale·(t − shift)³ + (t − shift) has the single root `shift`.
        let f = |t: f64| scale * (t - shift).powi(3) + (t - shift);
        let (a, b) = (shift - 1.3, shift + 2.1);
        let r = find_root(f, a, b, 1e-14).unwrap();
        let bracket_scale = f(a).abs().max(f(b).abs());
        prop_assert!(f(r).abs() <= 1e-8 * (1.0 + bracket_scale));
        prop_assert!((r - shift).abs() < 1e-9);
    }

    #[test]
    fn sphere_samples_are_reproducible(dim in 1usize..6, count in 1usize..50, seed in any::<u64>()) {
        let a = sphere_sample(dim, count, seed, false).unwrap();
        let b = sphere_sample(dim, count, seed, false).unwrap();
        prop_assert_eq!(&a, &b);
        for x in &a {
            let norm: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn det_bbar_first_zero_is_pi_over_k(k in 0.3f64..4.0) {
        let p = ModelParams::matched(k, 0.0, 1).unwrap();
        let t = first_blowup_time(&p, BlowupMode::Jacobi).unwrap();
        prop_assert!((t - PI / k).abs() < 1e-8);
        for i in 1..200 {
            prop_assert!(det_bbar(&p, t * i as f64 / 200.0) > 0.0);
        }
        // In dimension 5 the transverse factor vanishes later, at 2π/k.
        let p2 = ModelParams::matched(k, 0.0, 2).unwrap();
        let t2 = first_blowup_time(&p2, BlowupMode::Jacobi).unwrap();
        prop_assert!((t2 - PI / k).abs() < 1e-8);
    }

    #[test]
    fn reeb_flow_is_an_ambient_isometry(seed in 0u64..1000, s in -10.0f64..10.0) {
        let m = Manifold::hopf(1.0, 1, 1).unwrap();
        let mut rng = rng_for(seed, 3);
        let p = m.sample_point(&mut rng);
        let q = m.sample_point(&mut rng);
        let fp = reeb_flow(&m, &p, s).unwrap();
        let fq = reeb_flow(&m, &q, s).unwrap();
        prop_assert!(((&fp - &fq).norm() - (&p - &q).norm()).abs() < 1e-10);
    }

    #[test]
    fn n_tensor_vanishes_on_builtins(seed in 0u64..1000) {
        for m in builtins() {
            let mut rng = rng_for(seed, 5);
            let p = m.sample_point(&mut rng);
            let w = m.sample_point(&mut rng);
            // Only horizontal X: a Reeb component contributes −η(X)·X_h.
            let x = m.horizontal(&p, &w);
            prop_assert!(m.n_tensor(&p, &x).norm() < 1e-6);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn geodesic_conserves_speed_and_a(seed in 0u64..1000, a in -1.5f64..1.5) {
        let m = Manifold::hopf(1.0, 1, 1).unwrap();
        let (p, v) = unit_horizontal(&m, seed);
        let rec = integrate_geodesic(&m, &p, &v, a, 4.0 * PI).unwrap();
        for st in rec.samples() {
            prop_assert!((m.norm(&st.position, &st.velocity) - 1.0).abs() < 1e-8);
            prop_assert!((st.a - a).abs() < 1e-8);
        }
    }

    #[test]
    fn transported_frame_stays_orthonormal(seed in 0u64..1000, a in -1.0f64..1.0) {
        let m = Manifold::hopf(1.0, 1, 2).unwrap();
        let (p, v) = unit_horizontal(&m, seed);
        let rec = transport_frame(&integrate_geodesic(&m, &p, &v, a, PI).unwrap()).unwrap();
        for t in [0.5, 1.7, PI] {
            prop_assert!(rec.frame_defect(t) < 1e-8, "t={}: {}", t, rec.frame_defect(t));
        }
    }
}

#[test]
fn holomorphic_curvature_scales_with_k_squared() {
    for n in [1usize, 2] {
        let base = hypothesis_margins(&Manifold::hopf(1.0, 1, n).unwrap(), 0.0, 0.0, 40, 9);
        for lambda in [0.5, 2.0] {
            let r = hypothesis_margins(&Manifold::hopf(lambda, 1, n).unwrap(), 0.0, 0.0, 40, 9);
            let want = lambda * lambda * base.holomorphic_min;
            assert!((r.holomorphic_min - want).abs() <= 1e-5 * want, "n={n} λ={lambda}");
            if let (Some(t), Some(t0)) = (r.trace_min, base.trace_min) {
                let want = lambda * lambda * t0;
                assert!((t - want).abs() <= 1e-5 * want, "trace n={n} λ={lambda}");
            }
            // With k₁, k₂ set to the model values both margins saturate.
            let k2 = lambda * ((2 * n - 2) as f64).sqrt() / 2.0;
            let sat = hypothesis_margins(&Manifold::hopf(lambda, 1, n).unwrap(), lambda, k2, 40, 9);
            assert!(sat.margin1.abs() < 1e-5 && sat.margin2.map_or(true, |x| x.abs() < 1e-5));
        }
    }
}

#[test]
fn margins_are_reproducible() {
    let m = Manifold::hopf(1.0, 2, 2).unwrap();
    let a = hypothesis_margins(&m, 1.0, 0.5, 30, 42);
    let b = hypothesis_margins(&m, 1.0, 0.5, 30, 42);
    assert_eq!(a.margin1.to_bits(), b.margin1.to_bits());
    assert_eq!(a.margin2.map(f64::to_bits), b.margin2.map(f64::to_bits));
}

#[test]
fn orbit_jacobi_matches_closed_form_for_other_k() {
    let k = 2.0;
    let m = Manifold::hopf(k, 1, 1).unwrap();
    let p = m.origin();
    let v = horizontal_basis(&m, &p)[0].clone();
    let times: Vec<f64> = (0..=20).map(|i| 0.05 + (PI / k - 0.1) * i as f64 / 20.0).collect();
    let oj = orbit_jacobi(&m, &p, &v, &times).unwrap();
    let mp = ModelParams::matched(k, 0.0, 1).unwrap();
    for (i, &t) in times.iter().enumerate() {
        let err = (&oj.b[i] - bbar(&mp, t)).amax();
        assert!(err < 1e-6, "t={t}: {err:.3e}");
    }
}
