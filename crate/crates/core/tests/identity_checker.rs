use std::sync::OnceLock;

use defect_forge::identity::*;
use defect_forge::profile::*;
use proptest::prelude::*;

fn profile(k: i32) -> RadialProfile {
    let grid = RadialGrid::geometric_near_zero(1000, 20.0, DEFAULT_RATIO).unwrap();
    solve(8.0, k, grid, &SolveOptions::default()).unwrap().0
}

fn unit() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| profile(1))
}

fn sorted(ids: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

#[test]
fn algebraic_ledger_passes_and_is_complete() {
    let l = run_algebraic(0, 200);
    for e in &l.entries {
        assert!(e.pass, "{e:?}");
    }
    assert_eq!(
        l.ids().iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        sorted(&ALGEBRAIC_REGISTRY)
    );
    let neg = l.get("algebraic.negative_control").unwrap();
    assert!(neg.max_error.unwrap() >= 1.0);
}

#[test]
fn algebraic_ledger_is_deterministic() {
    assert_eq!(run_algebraic(5, 30), run_algebraic(5, 30));
}

#[test]
fn negated_c_is_caught() {
    let l = run_algebraic_with(1, 30, Corruption::NegateC);
    assert!(!l.all_pass());
    assert!(!l.get("algebraic.c_negative_for_f_positive").unwrap().pass);
    let clean = run_algebraic_with(1, 30, Corruption::None);
    assert!(clean.all_pass());
}

#[test]
fn zero_f_row_vanishes_to_rounding() {
    let l = run_algebraic_with(2, 10, Corruption::None);
    let e = l.get("algebraic.zero_f_row").unwrap();
    assert!(e.max_error.unwrap() < 1e-14, "{e:?}");
}

#[test]
fn integral_ledger_passes_on_a_unit_charge_profile() {
    let l = run_integral(unit(), 11, 10);
    for e in &l.entries {
        assert!(e.pass, "{e:?}");
        assert!(e.max_error.is_some(), "{e:?}");
    }
    assert_eq!(
        l.ids().iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        sorted(&INTEGRAL_REGISTRY)
    );
    assert_eq!(l.get("integral.zero_test_function").unwrap().max_error, Some(0.0));
    assert!(l.get("integral.negative_control").unwrap().max_error.unwrap() > 1e-2);
    assert_eq!(l, run_integral(unit(), 11, 10));
}

#[test]
fn triple_reduction_is_not_applicable_beyond_unit_charge() {
    let p = profile(2);
    let l = run_integral(&p, 4, 6);
    assert!(l.all_pass());
    let e = l.get("integral.reduced_ia").unwrap();
    assert!(e.max_error.is_none() && e.note.is_some());
    assert!(l.get("integral.reduced_ib").unwrap().max_error.unwrap() < 1e-8);
    assert_eq!(l.entries.len(), INTEGRAL_REGISTRY.len());
}

#[test]
fn dropping_the_cubic_term_breaks_the_d_form() {
    let p = unit();
    let b = Bump::new(1.0, 15.0, vec![0.5, -1.0, 0.8, 0.3]);
    let good = evaluate_identity(p, IdentityKind::DForm, &[&b]);
    let bad = evaluate_identity(p, IdentityKind::DFormDropped, &[&b]);
    assert_eq!(good.lhs, bad.lhs);
    assert!(good.error() < 1e-4 && bad.error() > 1e-2, "{good:?} {bad:?}");
}

proptest! {
    #[test]
    fn bump_derivatives_match_differences(
        coeffs in prop::collection::vec(-1.0f64..1.0, 3..=8),
        t in 0.0f64..1.0,
    ) {
        let b = Bump::new(2.0, 7.0, coeffs);
        let x = 2.0 + 5.0 * t;
        let h = 1e-5;
        let [f, d1, d2] = b.eval(x);
        let (p, m) = (b.eval(x + h), b.eval(x - h));
        prop_assert!(((p[0] - m[0]) / (2.0 * h) - d1).abs() < 1e-6);
        prop_assert!(((p[1] - m[1]) / (2.0 * h) - d2).abs() < 1e-5);
        prop_assert!(f.is_finite());
        prop_assert_eq!(b.eval(1.99), [0.0; 3]);
        prop_assert_eq!(b.eval(7.01), [0.0; 3]);
    }

    #[test]
    fn bump_is_twice_continuous_at_knots(coeffs in prop::collection::vec(-1.0f64..1.0, 3..=8)) {
        let b = Bump::new(0.0, 1.0, coeffs);
        for x in b.knots() {
            let (l, r) = (b.eval(x - 1e-12), b.eval(x + 1e-12));
            for j in 0..3 {
                prop_assert!((l[j] - r[j]).abs() < 1e-8, "order {} at {}", j, x);
            }
        }
    }
}
