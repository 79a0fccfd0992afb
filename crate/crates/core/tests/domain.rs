mod common;

use common::{c, ellipsoid, rand_vec, rand_with_norm, rng};
use complex_geodesics::cvec::{self, CMat};
use complex_geodesics::domain::{fiber_chart, fiber_unchart, unitary_frame, unitary_frame_at, BoundaryDatum, Domain, DomainConfig};
use complex_geodesics::{Error, C64};
use proptest::prelude::*;

fn identity_b(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

#[test]
fn ball_examples() {
    let ball = Domain::make_ball(3).unwrap();
    assert!((ball.rho(&[c(0.0, 0.0); 3]) + 1.0).abs() < 1e-15);
    let e1 = cvec::unit(3, 0);
    assert!(cvec::norm(&cvec::sub(&ball.normal(&e1), &e1)) < 1e-15);
    let mut r = rng(3);
    for _ in 0..5 {
        let z = cvec::scale(&rand_vec(&mut r, 3), c(0.5, 0.0));
        let d = ball.derivs(&z);
        assert!((d.hzzbar.clone() - CMat::identity(3, 3)).norm() < 1e-12);
        assert!(d.hzz.norm() < 1e-12);
    }
}

#[test]
fn ellipsoid_examples() {
    let b = identity_b(2);
    let flat = Domain::make_ellipsoid(2, &b, 0.0).unwrap();
    let ball = Domain::make_ball(2).unwrap();
    let mut r = rng(5);
    for _ in 0..5 {
        let z = rand_vec(&mut r, 2);
        assert!((flat.rho(&z) - ball.rho(&z)).abs() < 1e-14);
    }
    let dom = Domain::make_ellipsoid(2, &b, 0.3).unwrap();
    let p = dom.boundary_along(&cvec::unit(2, 0)).unwrap();
    assert!((p[0].re - 1.0 / 1.3f64.sqrt()).abs() < 1e-14);
    assert!(p[0].im.abs() < 1e-15 && p[1].norm() < 1e-15);
    let rep = dom.slc_check(&dom.boundary_samples(40, 2)).unwrap();
    assert!(rep.min_margin >= 0.7 - 1e-9, "margin {}", rep.min_margin);
    assert!(matches!(Domain::make_ellipsoid(2, &b, 1.5), Err(Error::NotSlc(_))));
    let ball_rep = ball.slc_check(&ball.boundary_samples(10, 2)).unwrap();
    assert!((ball_rep.min_margin - 1.0).abs() < 1e-12);
}

#[test]
fn slc_rejects_interior_samples() {
    let dom = ellipsoid(2, 0.2);
    assert!(matches!(dom.slc_check(&[vec![c(0.1, 0.0), c(0.0, 0.0)]]), Err(Error::SampleOffBoundary(_))));
}

#[test]
fn config_json() {
    let cfg: DomainConfig = serde_json::from_str(r#"{"type":"ellipsoid","n":2,"epsilon":0.2,"B":[[1,0.3],[0.3,0.3]]}"#).unwrap();
    let dom = Domain::from_config(&cfg).unwrap();
    assert_eq!(dom.dim(), 2);
    assert!((dom.epsilon() - 0.2).abs() < 1e-15);
    let cfg: DomainConfig = serde_json::from_str(r#"{"type":"ball","n":3}"#).unwrap();
    assert!(Domain::from_config(&cfg).unwrap().is_ball());
    let bad: DomainConfig = serde_json::from_str(r#"{"type":"torus","n":2}"#).unwrap();
    assert!(Domain::from_config(&bad).is_err());
    let shape: DomainConfig = serde_json::from_str(r#"{"type":"ellipsoid","n":2,"epsilon":0.2,"B":[[1,0],[0,1],[0,0]]}"#).unwrap();
    assert!(Domain::from_config(&shape).is_err());
}

#[test]
fn unitary_frame_examples() {
    let e1 = cvec::unit(3, 0);
    assert!((unitary_frame(&e1).unwrap() - CMat::identity(3, 3)).norm() < 1e-15);
    let mut r = rng(8);
    for _ in 0..10 {
        let nu = rand_with_norm(&mut r, 3, 1.0);
        let g = unitary_frame(&nu).unwrap();
        let col: Vec<C64> = g.column(0).iter().copied().collect();
        assert!(cvec::norm(&cvec::sub(&col, &nu)) < 1e-14);
        assert!((g.adjoint() * &g - CMat::identity(3, 3)).norm() < 1e-14);
    }
}

#[test]
fn fiber_chart_examples() {
    let ball = Domain::make_ball(3).unwrap();
    let e1 = cvec::unit(3, 0);
    assert!(cvec::norm(&fiber_chart(&ball, &e1, &e1).unwrap()) < 1e-15);
    let v = fiber_unchart(&ball, &e1, &[c(0.5, 0.0), c(0.0, 0.0)]).unwrap();
    let expect = [c(0.75f64.sqrt(), 0.0), c(0.5, 0.0), c(0.0, 0.0)];
    assert!(cvec::norm(&cvec::sub(&v, &expect)) < 1e-15);
    let dom = ellipsoid(3, 0.2);
    let mut r = rng(9);
    for p in dom.boundary_samples(10, 4) {
        let vhat = rand_with_norm(&mut r, 2, 0.5);
        let v = fiber_unchart(&dom, &p, &vhat).unwrap();
        let back = fiber_chart(&dom, &p, &v).unwrap();
        assert!(cvec::norm(&cvec::sub(&back, &vhat)) < 1e-13);
        let datum = BoundaryDatum::from_vhat(&dom, &p, &vhat).unwrap();
        let nu = dom.normal(&p);
        let g = unitary_frame_at(&nu, &nu).unwrap();
        let mut local = vec![c((1.0 - 0.25f64).sqrt(), 0.0)];
        local.extend(vhat.iter().copied());
        assert!(cvec::norm(&cvec::sub(&datum.v, &cvec::mat_vec(&g, &local))) < 1e-12);
        let pair = cvec::inner(&datum.v, &nu);
        assert!(pair.re > 0.0 && pair.im.abs() < 1e-14);
    }
    // Directions outside L_p are rejected.
    let p = dom.boundary_along(&cvec::unit(3, 0)).unwrap();
    let nu = dom.normal(&p);
    let bad = cvec::scale(&nu, c(-1.0, 0.0));
    assert!(matches!(BoundaryDatum::from_v(&dom, &p, &bad), Err(Error::NotInLp(_))));
}

fn fd_grad(dom: &Domain, z: &[C64], h: f64) -> Vec<C64> {
    (0..z.len())
        .map(|k| {
            let shift = |d: C64| {
                let mut w = z.to_vec();
                w[k] += d;
                dom.rho(&w)
            };
            let dx = (shift(c(h, 0.0)) - shift(c(-h, 0.0))) / (2.0 * h);
            let dy = (shift(c(0.0, h)) - shift(c(0.0, -h))) / (2.0 * h);
            c(0.5 * dx, -0.5 * dy)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oracles_match_finite_differences(seed in 0u64..10_000, scale in 0.3f64..1.1) {
        let dom = ellipsoid(2, 0.25);
        let mut r = rng(seed);
        let z = cvec::scale(&rand_with_norm(&mut r, 2, 1.0), c(scale, 0.0));
        let d = dom.derivs(&z);
        let fd = fd_grad(&dom, &z, 1e-5);
        let rel = cvec::norm(&cvec::sub(&fd, &d.grad)) / cvec::norm(&d.grad);
        prop_assert!(rel < 1e-6, "grad rel {rel}");
        // Second derivatives from differences of the analytic gradient.
        let h = 1e-5;
        for k in 0..2 {
            let step = |dz: C64| {
                let mut w = z.clone();
                w[k] += dz;
                dom.grad(&w)
            };
            let gx = cvec::scale(&cvec::sub(&step(c(h, 0.0)), &step(c(-h, 0.0))), c(0.5 / h, 0.0));
            let gy = cvec::scale(&cvec::sub(&step(c(0.0, h)), &step(c(0.0, -h))), c(0.5 / h, 0.0));
            for i in 0..2 {
                let dzk = 0.5 * (gx[i] - c(0.0, 1.0) * gy[i]);
                let dzbk = 0.5 * (gx[i] + c(0.0, 1.0) * gy[i]);
                let scale = 1.0 + d.hzzbar.norm();
                prop_assert!((dzk - d.hzz[(i, k)]).norm() < 1e-6 * scale);
                prop_assert!((dzbk - d.hzzbar[(i, k)]).norm() < 1e-6 * scale);
            }
        }
        prop_assert!((d.hzzbar.adjoint() - &d.hzzbar).norm() < 1e-12);
        prop_assert!((d.hzz.transpose() - &d.hzz).norm() < 1e-12);
    }

    #[test]
    fn sign_and_normalization(seed in 0u64..10_000) {
        let dom = ellipsoid(3, 0.2);
        let p = dom.boundary_samples(1, seed).remove(0);
        prop_assert!(dom.rho(&p).abs() < 1e-12);
        prop_assert!((cvec::norm(&dom.grad(&p)) - 1.0).abs() < 1e-10);
        let nu = dom.normal(&p);
        prop_assert!((cvec::norm(&nu) - 1.0).abs() < 1e-10);
        let inside = cvec::axpy(&p, c(-1e-3, 0.0), &nu);
        let outside = cvec::axpy(&p, c(1e-3, 0.0), &nu);
        prop_assert!(dom.rho(&inside) < 0.0 && dom.rho(&outside) > 0.0);
    }

    #[test]
    fn chart_round_trip(seed in 0u64..10_000, r in 0.0f64..0.95) {
        let dom = ellipsoid(3, 0.15);
        let p = dom.boundary_samples(1, seed).remove(0);
        let mut g = rng(seed ^ 0x55);
        let vhat = rand_with_norm(&mut g, 2, r);
        let v = fiber_unchart(&dom, &p, &vhat).unwrap();
        prop_assert!((cvec::norm(&v) - 1.0).abs() < 1e-13);
        prop_assert!(cvec::norm(&cvec::sub(&fiber_chart(&dom, &p, &v).unwrap(), &vhat)) < 1e-12);
    }

    #[test]
    fn unitary_image_moves_boundary(seed in 0u64..10_000) {
        let dom = ellipsoid(2, 0.2);
        let mut g = rng(seed);
        let a = CMat::from_fn(2, 2, |_, _| { let v = rand_vec(&mut g, 1); v[0] });
        let u = a.qr().q();
        let du = dom.unitary_image(&u);
        let p = dom.boundary_samples(1, seed).remove(0);
        let up = cvec::mat_vec(&u, &p);
        prop_assert!(du.rho(&up).abs() < 1e-12);
    }
}
