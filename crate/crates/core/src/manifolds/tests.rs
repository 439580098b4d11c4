use super::calculus::Connection;
use super::*;
use crate::numerics::rng_for;
use proptest::prelude::*;

fn models() -> Vec<Manifold> {
    vec![
        Manifold::hopf(1.0, 1, 1).unwrap(),
        Manifold::hopf(2.0, 1, 1).unwrap(),
        Manifold::hopf(0.7, 1, 2).unwrap(),
        Manifold::heisenberg(),
    ]
}

fn random_tangent(m: &Manifold, p: &Vector, rng: &mut SeededRng) -> Vector {
    let g = Vector::from_vec(crate::numerics::sampling::gaussian_vec(rng, m.ambient_dim()));
    let v = m.tangent_project(p, &g);
    let n = m.norm(p, &v);
    v / n
}

fn random_horizontal(m: &Manifold, p: &Vector, rng: &mut SeededRng) -> Vector {
    let v = m.horizontal(p, &random_tangent(m, p, rng));
    let n = m.norm(p, &v);
    v / n
}

use crate::numerics::SeededRng;

#[test]
fn parse_valid_strings() {
    let m = Manifold::parse("hopf:k=1.5,m=2,n=3").unwrap();
    assert_eq!(m.model(), Model::Hopf { k: 1.5, m: 2, n: 3 });
    assert_eq!(m.dim(), 7);
    assert_eq!(m.ambient_dim(), 8);
    let b = Manifold::parse("base:k=2,n=1").unwrap();
    assert_eq!(b.dim(), 2);
    assert!(!b.is_contact());
    assert_eq!(Manifold::parse("heisenberg").unwrap().dim(), 3);
    assert_eq!(Manifold::parse(&m.to_string()).unwrap().model(), m.model());
}

#[test]
fn parse_rejects_bad_input() {
    for s in ["hopf:k=-1,m=1,n=1", "hopf:k=0", "hopf:k=1,m=0,n=1", "sphere", "hopf:q=1", "base:k=x", "heisenberg:k=1", "hopf:k=1,n=0"] {
        assert!(Manifold::parse(s).is_err(), "{s}");
    }
}

#[test]
fn volumes_of_models() {
    let v = Manifold::hopf(1.0, 1, 1).unwrap().volume().unwrap();
    assert!((v - 16.0 * PI * PI).abs() < 1e-12);
    let v2 = Manifold::hopf(1.0, 2, 1).unwrap().volume().unwrap();
    assert!((v2 - 8.0 * PI * PI).abs() < 1e-12);
    let vb = Manifold::base(2.0, 1).unwrap().volume().unwrap();
    assert!((vb - PI).abs() < 1e-12);
}

#[test]
fn contact_metric_structure_holds() {
    for m in models() {
        let mut rng = rng_for(11, 0);
        for _ in 0..5 {
            let p = m.sample_point(&mut rng);
            let xi = m.xi(&p);
            assert!((m.eta(&p, &xi) - 1.0).abs() < 1e-13, "{m}");
            assert!((m.metric(&p, &xi, &xi) - 1.0).abs() < 1e-13);
            assert!(m.j(&p, &xi).norm() < 1e-13);
            let x = random_horizontal(&m, &p, &mut rng);
            let y = random_horizontal(&m, &p, &mut rng);
            assert!(m.metric(&p, &xi, &x).abs() < 1e-13);
            let jjx = m.j(&p, &m.j(&p, &x));
            assert!((jjx + &x).norm() < 1e-12);
            let jx = m.j(&p, &x);
            let jy = m.j(&p, &y);
            assert!((m.metric(&p, &jx, &jy) - m.metric(&p, &x, &y)).abs() < 1e-12);
            let de = m.d_eta(&p, &x, &y);
            assert!((de - m.metric(&p, &x, &jy)).abs() < 1e-8, "{m}: dη {de}");
            let cd = m.contact_data(&p).unwrap();
            assert!((cd.eta.dot(&xi) - 1.0).abs() < 1e-12);
            assert!((&cd.j * &x - jx).norm() < 1e-12);
            assert!(cd.h.amax() == 0.0);
        }
    }
}

#[test]
fn base_has_no_contact_data() {
    let b = Manifold::base(1.0, 2).unwrap();
    assert!(matches!(b.contact_data(&b.origin()), Err(Error::NotApplicable(_))));
}

#[test]
fn connection_is_metric_and_torsion_free() {
    for m in models() {
        let mut rng = rng_for(5, 1);
        let p = m.sample_point(&mut rng);
        let x = random_tangent(&m, &p, &mut rng);
        let y = random_tangent(&m, &p, &mut rng);
        let z = random_tangent(&m, &p, &mut rng);
        let yf = m.extend(&y);
        let zf = m.extend(&z);
        let xf = m.extend(&x);
        let nxy = m.covariant_derivative(&p, &x, &yf);
        let nxz = m.covariant_derivative(&p, &x, &zf);
        let nyx = m.covariant_derivative(&p, &y, &xf);
        let gyz = |q: &Vector| Vector::from_element(1, m.metric(q, &yf(q), &zf(q)));
        let lhs = m.directional_derivative(&p, &x, &gyz, crate::numerics::FD_STEP)[0];
        let rhs = m.metric(&p, &nxy, &z) + m.metric(&p, &y, &nxz);
        assert!((lhs - rhs).abs() < 1e-8, "{m}: metric {lhs} vs {rhs}");
        let br = m.lie_bracket(&p, &xf, &yf);
        assert!((nxy - nyx - br).norm() < 1e-8, "{m}: torsion");
    }
}

#[test]
fn reeb_field_is_killing_and_sasakian() {
    for m in models() {
        let mut rng = rng_for(3, 2);
        let p = m.sample_point(&mut rng);
        let u = random_tangent(&m, &p, &mut rng);
        let w = random_tangent(&m, &p, &mut rng);
        let nxi = m.nabla_xi(&p, &u);
        assert!((nxi + m.j(&p, &u) * 0.5).norm() < 1e-8, "{m}");
        let nj = m.nabla_j(&p, &u, &w);
        let cr = m.xi(&p) * (0.5 * m.metric(&p, &u, &w)) - &u * (0.5 * m.eta(&p, &w));
        assert!((nj - cr).norm() < 1e-8, "{m}");
        assert!(m.lie_h(&p, &u).norm() < 1e-9, "{m}");
    }
}

#[test]
fn closed_form_curvature_matches_finite_differences() {
    for m in models() {
        let mut rng = rng_for(17, 3);
        for _ in 0..3 {
            let p = m.sample_point(&mut rng);
            let x = random_tangent(&m, &p, &mut rng);
            let y = random_tangent(&m, &p, &mut rng);
            let z = random_tangent(&m, &p, &mut rng);
            let exact = m.riemann(&p, &x, &y, &z);
            let fd = m.fd_curvature(Connection::LeviCivita, &p, &x, &y, &z);
            assert!((&exact - &fd).norm() < 1e-5 * (1.0 + exact.norm()), "{m}: {exact} vs {fd}");
        }
    }
}

#[test]
fn tanaka_webster_closed_form_matches_finite_differences() {
    for m in models() {
        let mut rng = rng_for(19, 4);
        let p = m.sample_point(&mut rng);
        let x = random_tangent(&m, &p, &mut rng);
        let y = random_tangent(&m, &p, &mut rng);
        let z = random_tangent(&m, &p, &mut rng);
        let exact = m.tanaka_webster(&p, &x, &y, &z);
        let fd = m.fd_curvature(Connection::Tanaka, &p, &x, &y, &z);
        assert!((&exact - &fd).norm() < 1e-5 * (1.0 + exact.norm()), "{m}: {exact} vs {fd}");
    }
}

#[test]
fn sectional_curvatures_of_models() {
    let m = Manifold::hopf(1.0, 1, 1).unwrap();
    let p = m.origin();
    let mut rng = rng_for(1, 0);
    let x = random_horizontal(&m, &p, &mut rng);
    let jx = m.j(&p, &x);
    let xi = m.xi(&p);
    assert!((m.riemann4(&p, &x, &jx, &jx, &x) - 0.25).abs() < 1e-13);
    assert!((m.riemann4(&p, &x, &xi, &xi, &x) - 0.25).abs() < 1e-13);
    assert!((m.metric(&p, &m.tanaka_webster(&p, &jx, &x, &x), &jx) - 1.0).abs() < 1e-8);

    let h = Manifold::heisenberg();
    let p = Vector::from_vec(vec![0.2, 0.1, -0.4]);
    let e1 = Vector::from_vec(vec![1.0, 0.0, -0.05]);
    let e2 = Vector::from_vec(vec![0.0, 1.0, 0.1]);
    let xi = h.xi(&p);
    assert!((h.riemann4(&p, &e1, &e2, &e2, &e1) + 0.75).abs() < 1e-13);
    assert!((h.riemann4(&p, &e1, &xi, &xi, &e1) - 0.25).abs() < 1e-13);
    assert!(h.tanaka_webster(&p, &e1, &e2, &e2).norm() < 1e-9);
}

#[test]
fn tanaka_webster_holomorphic_curvature_scales_with_k_squared() {
    for k in [0.5, 1.0, 2.0] {
        let m = Manifold::hopf(k, 1, 2).unwrap();
        let mut rng = rng_for(23, 5);
        let p = m.sample_point(&mut rng);
        let x = random_horizontal(&m, &p, &mut rng);
        let jx = m.j(&p, &x);
        let hol = m.metric(&p, &m.tanaka_webster(&p, &jx, &x, &x), &jx);
        assert!((hol - k * k).abs() < 1e-7, "k={k}: {hol}");
    }
}

#[test]
fn base_curvature_agrees_with_submersion_formula() {
    // K_B(X,Y) = k²(¼ + ¾ |[X,Y]^V|²) for Euclidean-orthonormal horizontal X, Y.
    let sphere = Manifold::hopf(1.0, 1, 2).unwrap();
    for k in [1.0, 2.0] {
        let base = Manifold::base(k, 2).unwrap();
        let mut rng = rng_for(29, 6);
        for _ in 0..4 {
            let p = sphere.sample_point(&mut rng);
            let x = random_horizontal(&sphere, &p, &mut rng);
            let y0 = random_horizontal(&sphere, &p, &mut rng);
            let y = &y0 - &x * x.dot(&y0);
            let y = &y / y.norm();
            let hx = sphere.extend(&x);
            let hy = sphere.extend(&y);
            let hxf = |q: &Vector| sphere.horizontal(q, &hx(q));
            let hyf = |q: &Vector| sphere.horizontal(q, &hy(q));
            let br = sphere.lie_bracket(&p, &hxf, &hyf);
            let vert = sphere.eta(&p, &br);
            let oneill = k * k * (0.25 + 0.75 * vert * vert);
            // Base metric is ⟨·,·⟩/k², so g-unit vectors are k·(Euclidean unit).
            let (xb, yb) = (&x * k, &y * k);
            let sec = base.riemann4(&p, &xb, &yb, &yb, &xb);
            assert!((sec - oneill).abs() < 1e-8, "k={k}: {sec} vs {oneill}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn curvature_symmetries(seed in 0u64..10_000, which in 0usize..5) {
        let m = if which == 4 { Manifold::base(1.3, 2).unwrap() } else { models()[which].clone() };
        let mut rng = rng_for(seed, 9);
        let p = m.sample_point(&mut rng);
        let v: Vec<Vector> = (0..4).map(|_| random_tangent(&m, &p, &mut rng)).collect();
        let (x, y, z, w) = (&v[0], &v[1], &v[2], &v[3]);
        let r = |a: &Vector, b: &Vector, c: &Vector| m.riemann(&p, a, b, c);
        prop_assert!((r(x, y, z) + r(y, x, z)).norm() < 1e-12);
        prop_assert!((r(x, y, z) + r(y, z, x) + r(z, x, y)).norm() < 1e-12);
        let a = m.riemann4(&p, x, y, z, w);
        let b = m.riemann4(&p, z, w, x, y);
        prop_assert!((a - b).abs() < 1e-12);
        let c = m.riemann4(&p, x, y, w, z);
        prop_assert!((a + c).abs() < 1e-12);
    }

    #[test]
    fn complex_structure_squares_to_minus_one(seed in 0u64..10_000) {
        let m = Manifold::hopf(1.7, 1, 2).unwrap();
        let mut rng = rng_for(seed, 10);
        let p = m.sample_point(&mut rng);
        let x = random_horizontal(&m, &p, &mut rng);
        prop_assert!((m.j(&p, &m.j(&p, &x)) + &x).norm() < 1e-12);
        prop_assert!((m.norm(&p, &m.j(&p, &x)) - 1.0).abs() < 1e-12);
    }
}
