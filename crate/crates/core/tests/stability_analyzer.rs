use std::f64::consts::PI;
use std::sync::OnceLock;

use defect_forge::closure::ClosureOptions;
use defect_forge::identity::{evaluate_identity, reduced_ib_discrete, Bump, IdentityKind};
use defect_forge::interp::{fornberg, stencil_start};
use defect_forge::profile::*;
use defect_forge::quadrature::gauss_legendre;
use defect_forge::sphere::moments;
use defect_forge::stability::*;
use defect_forge::{BinghamCoeffs, OrderParams, QuadratureSpec};
use nalgebra::Matrix5;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn solved(k: i32) -> RadialProfile {
    let grid = RadialGrid::geometric_near_zero(800, 20.0, DEFAULT_RATIO).unwrap();
    solve(8.0, k, grid, &SolveOptions::default()).unwrap().0
}

fn unit() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| solved(1))
}

fn far_k2() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| {
        let pol = TruncationPolicy {
            inner_nodes: 1000,
            min_radius: 640.0,
            ..Default::default()
        };
        solve_infinite(8.0, 2, &pol, &SolveOptions::default()).unwrap().0
    })
}

fn all_labels(p: &RadialProfile) -> Vec<BlockLabel> {
    let opts = VerdictOptions {
        n_max: 3,
        m_max: 3,
        ..Default::default()
    };
    block_labels(p, &opts)
}

fn random_nodal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn lowest(p: &RadialProfile, label: BlockLabel) -> (f64, f64) {
    let b = assemble_block(p, label);
    (smallest(&b.stiffness, &b.mass, 1)[0].value, b.eps_spec())
}

#[test]
fn isotropic_state_has_two_fifteenths_entries() {
    let m = lq_matrix(OrderParams::new(0.0, 0.0), &ClosureOptions::default()).unwrap();
    let t = 2.0 / 15.0;
    let want = [
        [t, 0.0, 0.0, 0.0, 0.0],
        [0.0, t, 0.0, 0.0, 0.0],
        [0.0, 0.0, t, 0.0, 0.0],
        [0.0, 0.0, 0.0, t, 0.0],
        [0.0, 0.0, 0.0, 0.0, t],
    ];
    for i in 0..5 {
        for j in 0..5 {
            assert!((m[i][j] - want[i][j]).abs() < 1e-12, "({i},{j}) {}", m[i][j]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]
    #[test]
    fn second_moment_operator_is_positive_definite(u in -0.33f64..0.33, v in -0.16f64..0.33) {
        let t = OrderParams::new(u, v);
        prop_assume!(t.is_physical(0.01));
        let m = lq_matrix(t, &ClosureOptions::default()).unwrap();
        let mat = Matrix5::from_fn(|i, j| m[i][j]);
        let ev = mat.symmetric_eigenvalues();
        prop_assert!(ev.min() > 0.0, "min eigenvalue {}", ev.min());
    }
}

/// <(m m : X)(m m : Y)> for the Bingham density, over the full sphere.
fn sphere_covariance(f: f64, g: f64, x: [[f64; 3]; 3], y: [[f64; 3]; 3]) -> f64 {
    let rule = gauss_legendre(96);
    let (cs, wc) = rule.mapped(-1.0, 1.0);
    let nphi = 256;
    let (mut z, mut s) = (0.0, 0.0);
    for (&c, &w) in cs.iter().zip(&wc) {
        let st = (1.0 - c * c).sqrt();
        for j in 0..nphi {
            let phi = 2.0 * PI * j as f64 / nphi as f64;
            let m = [st * phi.cos(), st * phi.sin(), c];
            let dens = (f * (m[0] * m[0] - m[1] * m[1]) + g * (3.0 * m[2] * m[2] - 1.0)).exp() * w;
            let proj = |t: [[f64; 3]; 3]| -> f64 {
                (0..3).map(|a| (0..3).map(|b| m[a] * t[a][b] * m[b]).sum::<f64>()).sum()
            };
            z += dens;
            s += dens * proj(x) * proj(y);
        }
    }
    s / z
}

fn shear(dir: [f64; 2]) -> [[f64; 3]; 3] {
    let h = 0.5f64.sqrt();
    [
        [0.0, 0.0, h * dir[0]],
        [0.0, 0.0, h * dir[1]],
        [h * dir[0], h * dir[1], 0.0],
    ]
}

#[test]
fn rotated_shear_block_matches_sphere_quadrature() {
    let (f, g) = (2.0, -1.0);
    let m = moments(BinghamCoeffs::new(f, g), &QuadratureSpec::default()).unwrap();
    let phi = PI / 3.0;
    let (s, c) = (0.5 * phi).sin_cos();
    let (e3, e4) = (shear([c, s]), shear([s, -c]));
    let oracle = [
        sphere_covariance(f, g, e3, e3),
        sphere_covariance(f, g, e3, e4),
        sphere_covariance(f, g, e4, e4),
    ];
    let got = lq34_at(&m, phi);
    let rot = rotate34(lq34_at(&m, 0.0), phi);
    for (a, b) in [(got[0][0], oracle[0]), (got[0][1], oracle[1]), (got[1][1], oracle[2])] {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    for (a, b) in [(rot.0, oracle[0]), (rot.1, oracle[1]), (rot.2, oracle[2])] {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn blocks_are_symmetric_with_positive_mass() {
    let p = unit();
    for l in all_labels(p) {
        let b = assemble_block(p, l);
        let (lo, hi) = b.stiffness.gershgorin();
        assert!(b.stiffness.symmetry_defect() <= 1e-14 * lo.abs().max(hi.abs()), "{l}");
        assert!(b.mass.iter().all(|&m| m > 0.0), "{l}");
        let zero = vec![0.0; p.len()];
        let comps: Vec<&[f64]> = (0..b.components()).map(|_| zero.as_slice()).collect();
        assert_eq!(b.value(&comps), 0.0, "{l}");
    }
}

#[test]
fn in_plane_zero_mode_form_is_a_multiple_of_the_monotonicity_form() {
    let p = unit();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (j, i001) = (assemble_j(p), assemble_ia_001(p));
    for _ in 0..5 {
        let mu = random_nodal(&mut rng, p.len());
        let nu = random_nodal(&mut rng, p.len());
        let s3nu: Vec<f64> = nu.iter().map(|x| 3f64.sqrt() * x).collect();
        let a = i001.value(&[&s3nu, &mu]);
        let b = PI * j.value(&[&mu, &nu]);
        assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()), "{a} vs {b}");
    }
}

#[test]
fn unit_charge_forms_are_nonnegative() {
    let p = unit();
    for l in [BlockLabel::J1d, BlockLabel::IA02, BlockLabel::IA001] {
        let (lam, eps) = lowest(p, l);
        assert!(lam >= -eps, "{l}: {lam} < -{eps}");
    }
}

#[test]
fn lowest_eigenvalue_grows_with_mode_number() {
    let p = unit();
    let an: Vec<f64> = (1..=6).map(|n| lowest(p, BlockLabel::IAn(n)).0).collect();
    assert!(an.windows(2).all(|w| w[1] >= w[0]), "{an:?}");
    let bm: Vec<f64> = (1..=6).map(|m| lowest(p, BlockLabel::IBMode(m)).0).collect();
    assert!(bm.windows(2).all(|w| w[1] >= w[0]), "{bm:?}");
}

#[test]
fn mode_forms_are_bounded_below_by_the_reduced_form() {
    let p = unit();
    let (tilde, eps) = lowest(p, BlockLabel::IBTilde);
    for m in 1..=6 {
        let (lam, _) = lowest(p, BlockLabel::IBMode(m));
        assert!(lam >= tilde - eps, "m={m}: {lam} < {tilde}");
    }
}

#[test]
fn reduced_form_on_ground_state_direction_matches_closed_form() {
    for p in [unit(), far_k2()] {
        let r = p.r();
        let big_r = r[r.len() - 1];
        let eta = Bump::new(0.05 * big_r, 0.9 * big_r, vec![0.3, 1.0, -0.4, 0.8]);
        let zeta = Bump::new(
            eta.lo,
            eta.hi,
            eta.coeffs.iter().map(|c| -3.0 * c).collect(),
        );
        // exact discrete identity, up to the equilibrium residual weighted by r dr
        let exact = reduced_ib_discrete(p, &eta, &zeta);
        assert!(exact.error() < 1e-6, "k={} {:?}", p.k, exact);
        // against the closed form int (u^2 + 9 v^2) eta'^2 - (k^2-1) (u eta / r)^2
        let et: Vec<f64> = r.iter().map(|&x| eta.eval(x)[0]).collect();
        let closed = reduced_instability_value(p, &et);
        assert!(
            (exact.lhs - closed).abs() < 1e-3 * exact.scale,
            "k={} {} vs {}",
            p.k,
            exact.lhs,
            closed
        );
    }
}

#[test]
fn monotonicity_form_matches_its_integrated_by_parts_expression() {
    let p = unit();
    let r = p.r();
    let chi = Bump::new(0.5, 18.0, vec![0.2, 1.0, 0.7, -0.5, 0.4]);
    let deriv = |x: &[f64], i: usize| {
        let s = stencil_start(r, r[i], 5);
        let w = fornberg(r[i], &r[s..s + 5], 1);
        w[1].iter().zip(&x[s..]).map(|(a, b)| a * b).sum::<f64>()
    };
    let c: Vec<f64> = r.iter().map(|&x| chi.eval(x)[0]).collect();
    let mu: Vec<f64> = (0..p.len()).map(|i| deriv(&p.u, i) * c[i]).collect();
    let nu: Vec<f64> = (0..p.len()).map(|i| deriv(&p.v, i) * c[i]).collect();
    let assembled = assemble_j(p).value(&[&mu, &nu]);
    let quad = evaluate_identity(p, IdentityKind::Monotonicity, &[&chi]);
    // u' chi is close to a kernel direction, so both sides are small
    assert!(quad.error() < 1e-4, "{quad:?}");
    let rel = (assembled - quad.rhs).abs() / quad.scale;
    assert!(rel < 1e-3, "assembled {assembled} vs {} (rel {rel:e})", quad.rhs);
}

#[test]
fn iterative_and_dense_lowest_eigenvalues_agree() {
    let p = unit();
    for l in [BlockLabel::J1d, BlockLabel::IBTilde, BlockLabel::IAn(1)] {
        let c = cross_check(p, l, 400);
        assert!(c.abs_diff <= 1e-8, "{l}: {c:?}");
    }
}

#[test]
fn opposite_charge_gives_identical_spectra() {
    let opts = VerdictOptions {
        n_max: 2,
        m_max: 2,
        cross_check_nodes: None,
        ..Default::default()
    };
    let a = full_verdict(unit(), &opts).unwrap();
    let b = full_verdict(&solved(-1), &opts).unwrap();
    assert_eq!(a.verdict, Verdict::Stable);
    assert_eq!(a.verdict, b.verdict);
    for (x, y) in a.blocks.iter().zip(&b.blocks) {
        assert_eq!(x.label, y.label);
        for (s, t) in x.eigenvalues.iter().zip(&y.eigenvalues) {
            assert!((s - t).abs() <= 1e-9 * s.abs().max(1.0), "{}: {s} vs {t}", x.name);
        }
    }
}

#[test]
fn double_charge_admits_a_negative_direction() {
    let p = far_k2();
    let d = instability_search(p, &SearchOptions::default()).unwrap();
    assert!(d.is_negative(), "{d:?}");
    assert!(d.itilde_value < 0.0 && d.ib_escape < 0.0);
    assert!((d.ib_escape - d.ib_escape_direct).abs() < 1e-9 * d.ib_escape.abs());
}

#[test]
fn unit_charge_tent_family_stays_positive() {
    let pol = TruncationPolicy {
        inner_nodes: 1000,
        min_radius: 640.0,
        ..Default::default()
    };
    let (p, _, _) = solve_infinite(8.0, 1, &pol, &SolveOptions::default()).unwrap();
    let fam = tent_family(&p, &SearchOptions::default()).unwrap();
    assert!(!fam.is_empty());
    for d in &fam {
        assert!(d.itilde_value > 0.0 && d.ib_escape > 0.0, "{d:?}");
    }
    assert!(instability_search(&p, &SearchOptions::default()).is_err());
}

#[test]
fn regular_components_do_not_drift_under_refinement() {
    // J, I_A_001 and I_B_tilde carry a component that is nonzero at the origin; pinning it
    // at the first node made these eigenvalues fall by ~1e-3 per doubling.
    let coarse = solved(1);
    let fine = {
        let grid = RadialGrid::geometric_near_zero(1600, 20.0, DEFAULT_RATIO).unwrap();
        solve(8.0, 1, grid, &SolveOptions::default()).unwrap().0
    };
    for label in [BlockLabel::J1d, BlockLabel::IA001, BlockLabel::IBTilde] {
        let (a, _) = lowest(&coarse, label);
        let (b, _) = lowest(&fine, label);
        assert!((a - b).abs() < 1e-4 * b.abs(), "{label}: {a} vs {b}");
    }
}

#[test]
fn first_node_keeps_only_null_directions_of_the_centrifugal_matrix() {
    let p = unit();
    let expect = |label, free: usize| {
        let b = assemble_block(p, label);
        assert_eq!(b.origin_free.iter().filter(|f| **f).count(), free, "{label}");
    };
    expect(BlockLabel::J1d, 1);
    expect(BlockLabel::IA02, 0);
    expect(BlockLabel::IAn(1), 2);
    expect(BlockLabel::IAn(2), 0);
    expect(BlockLabel::IA1Tilde, 1);
    // the basis is orthonormal and pack / unpack round-trip on the free directions
    let b = assemble_block(p, BlockLabel::IAn(1));
    let np = b.components();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let comps: Vec<Vec<f64>> = (0..np).map(|_| random_nodal(&mut rng, p.len())).collect();
    let refs: Vec<&[f64]> = comps.iter().map(|c| c.as_slice()).collect();
    let x = b.pack(&refs);
    let back = b.unpack(&x);
    for i in 1..b.r.len() {
        for c in 0..np {
            assert_eq!(back[i * np + c], comps[c][i]);
        }
    }
    let n = b.r.len();
    let again: Vec<Vec<f64>> = (0..np)
        .map(|c| (0..=n).map(|i| if i < n { back[i * np + c] } else { 0.0 }).collect())
        .collect();
    let refs: Vec<&[f64]> = again.iter().map(|c| c.as_slice()).collect();
    let x2 = b.pack(&refs);
    for (a, b) in x.iter().zip(&x2) {
        assert!((a - b).abs() < 1e-14);
    }
}
