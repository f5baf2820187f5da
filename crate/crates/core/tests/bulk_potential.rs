use defect_forge::bulk::{
    bifurcation_threshold, bulk_density, bulk_eval, bulk_state, critical_points,
    critical_points_with, s2, s2_with_order, tangency, Stability,
};
use defect_forge::closure::ClosureOptions;
use defect_forge::OrderParams;
use proptest::prelude::*;

/// s2 from the power series of int_0^1 x^{2p} e^{eta x^2} dx = sum eta^n / (n! (2n + 2p + 1)).
fn s2_series(eta: f64) -> f64 {
    let (mut f0, mut f2) = (0.0, 0.0);
    let mut t = 1.0;
    for n in 0..400 {
        if n > 0 {
            t *= eta / n as f64;
        }
        f0 += t / (2 * n + 1) as f64;
        f2 += t / (2 * n + 3) as f64;
    }
    0.5 * (3.0 * f2 / f0 - 1.0)
}

#[test]
fn s2_values() {
    assert_eq!(s2(0.0).unwrap(), 0.0);
    assert!((s2(5.0).unwrap() - 0.6463993319056482).abs() < 1e-13);
    assert!(s2(100.0).unwrap() > 0.95);
    for eta in [-4.0, -1.0, 0.3, 2.0, 7.5, 15.0, 30.0] {
        assert!((s2(eta).unwrap() - s2_series(eta)).abs() < 1e-12, "eta={eta}");
    }
    assert!(s2(500.0).unwrap() < 1.0 && s2(-500.0).unwrap() > -0.5);
    assert!(s2(500.1).is_err());
}

#[test]
fn s2_monotone() {
    let mut prev = -0.5;
    for i in 0..=2000 {
        let eta = -500.0 + i as f64 * 0.5;
        let s = s2(eta).unwrap();
        assert!(s > prev, "eta={eta}");
        prev = s;
    }
}

#[test]
fn roots_below_threshold() {
    let cp = critical_points(5.0).unwrap();
    assert_eq!(cp.eta_roots, vec![0.0]);
    assert_eq!(cp.classification, vec![Stability::Stable]);
}

#[test]
fn roots_at_alpha_eight() {
    let cp = critical_points(8.0).unwrap();
    assert_eq!(cp.eta_roots.len(), 3, "{:?}", cp.eta_roots);
    let (e2, e0, e1) = (cp.eta_roots[0], cp.eta_roots[1], cp.eta_roots[2]);
    assert_eq!(e0, 0.0);
    assert!((e1 - 5.400693).abs() < 1e-5);
    assert!((e2 + 0.615136).abs() < 1e-5);
    assert!(cp.s2_values[2] > 0.0 && cp.s2_values[2] < 1.0);
    assert!((cp.s2_values[2] - 0.675087).abs() < 1e-5);
    let (_, eta_star) = tangency(32).unwrap();
    assert!(e1 > eta_star && eta_star > e2);
    assert_eq!(
        cp.classification,
        vec![Stability::Unstable, Stability::Unstable, Stability::Stable]
    );
    for (e, s) in cp.eta_roots.iter().zip(&cp.s2_values) {
        assert!((e - 8.0 * s).abs() < 1e-10);
    }
}

#[test]
fn two_positive_roots_between_threshold_and_seven_and_a_half() {
    let cp = critical_points(7.0).unwrap();
    assert_eq!(cp.eta_roots.len(), 3);
    assert_eq!(cp.eta_roots[0], 0.0);
    assert!((cp.eta_roots[1] - 0.87988).abs() < 1e-4);
    assert!((cp.eta_roots[2] - 3.56364).abs() < 1e-4);
    assert_eq!(
        cp.classification,
        vec![Stability::Stable, Stability::Unstable, Stability::Stable]
    );
}

#[test]
fn threshold() {
    let a32 = bifurcation_threshold(32, 1e-8).unwrap();
    let a64 = bifurcation_threshold(64, 1e-8).unwrap();
    assert!((a32 - 6.731486396).abs() < 1e-6, "{a32}");
    assert!((a32 - a64).abs() < 1e-6);
    let (amin, emin) = tangency(32).unwrap();
    assert!((amin - a32).abs() < 1e-6);
    assert!((emin - 2.17829).abs() < 1e-4);
    assert_eq!(critical_points_with(a32 - 1e-5, 32).unwrap().eta_roots.len(), 1);
    assert_eq!(critical_points_with(a32 + 1e-5, 32).unwrap().eta_roots.len(), 3);
    assert!((s2_with_order(3.0, 32).unwrap() - s2_with_order(3.0, 64).unwrap()).abs() < 1e-14);
}

#[test]
fn isotropic_density() {
    let v = bulk_density(OrderParams::new(0.0, 0.0), 8.0).unwrap();
    assert!((v + (4.0 * std::f64::consts::PI).ln()).abs() < 1e-13);
    let e = bulk_eval(OrderParams::new(0.0, 0.0), 8.0, &ClosureOptions::default()).unwrap();
    assert!((e.hess[0][0] - 2.0 * (7.5 - 8.0)).abs() < 1e-10);
    assert!((e.hess[1][1] - 6.0 * (7.5 - 8.0)).abs() < 1e-10);
    assert!(e.hess[0][1].abs() < 1e-12);
}

#[test]
fn minimiser_at_alpha_eight() {
    let (s, p) = bulk_state(8.0).unwrap();
    assert!((p.u - s / 2.0).abs() < 1e-15);
    let e = bulk_eval(p, 8.0, &ClosureOptions::default()).unwrap();
    assert!(e.grad[0].abs() < 1e-8 && e.grad[1].abs() < 1e-8, "{:?}", e.grad);
    let h = e.hess;
    let tr = h[0][0] + h[1][1];
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let lmin = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
    assert!(lmin >= -1e-8, "{h:?}");
    // global minimum over a coarse sample of the slice
    for i in -8..=8 {
        for j in -4..=8 {
            let q = OrderParams::new(0.04 * i as f64, 0.035 * j as f64);
            if q.is_physical(1e-3) {
                assert!(bulk_density(q, 8.0).unwrap() >= e.value - 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gradient_matches_finite_differences(u in -0.25f64..0.25, v in -0.12f64..0.2) {
        let p = OrderParams::new(u, v);
        prop_assume!(p.is_physical(0.03));
        let alpha = 8.0;
        let e = bulk_eval(p, alpha, &ClosureOptions::default()).unwrap();
        let h = 1e-5;
        let fd_u = (bulk_density(OrderParams::new(u + h, v), alpha).unwrap()
            - bulk_density(OrderParams::new(u - h, v), alpha).unwrap()) / (2.0 * h);
        let fd_v = (bulk_density(OrderParams::new(u, v + h), alpha).unwrap()
            - bulk_density(OrderParams::new(u, v - h), alpha).unwrap()) / (2.0 * h);
        prop_assert!((fd_u - e.grad[0]).abs() <= 1e-6 * e.grad[0].abs().max(1.0));
        prop_assert!((fd_v - e.grad[1]).abs() <= 1e-6 * e.grad[1].abs().max(1.0));
        prop_assert!((e.hess[0][1] - e.hess[1][0]).abs() < 1e-10 * e.hess[0][1].abs().max(1.0));
    }

    #[test]
    fn even_in_u(u in 0.0f64..0.3, v in -0.12f64..0.2) {
        let p = OrderParams::new(u, v);
        prop_assume!(p.is_physical(0.02));
        let a = bulk_density(p, 8.0).unwrap();
        let b = bulk_density(OrderParams::new(-u, v), 8.0).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}
