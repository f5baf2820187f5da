//! Integration-by-parts identities on a solved profile, tested against random bumps.
//!
//! Profile fields and nodal moments are interpolated by local degree-5 polynomials
//! (6 nodes, fixed per integration interval); integrals use Gauss-Legendre on the
//! intervals between grid nodes and bump knots.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::interp::{fornberg, stencil_start};
use crate::profile::{Geometry, RadialProfile};
use crate::quadrature::{gauss_legendre, Neumaier};
use crate::stability::assemble_ib_tilde;

use super::{Bump, IdentityLedger, LedgerEntry};

pub const INTEGRAL_REGISTRY: [&str; 9] = [
    "integral.a_form",
    "integral.b_form",
    "integral.c_form",
    "integral.d_form",
    "integral.g_form",
    "integral.negative_control",
    "integral.reduced_ia",
    "integral.reduced_ib",
    "integral.zero_test_function",
];

const TOL: f64 = 1e-4;
const STENCIL: usize = 6;
const GAUSS: usize = 6;
/// Bumps avoid this fraction of [0, R] at each end.
const END_BAND: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    /// v-equation ground-state identity; one bump.
    AForm,
    /// u-equation ground-state identity; one bump.
    BForm,
    /// Identity for v' eta; one bump.
    CForm,
    /// Identity for u' eta; one bump.
    DForm,
    /// Identity for u eta / r; one bump.
    GForm,
    /// D-form with the 2 k^2 u u' eta^2 / r^3 term dropped (must fail).
    DFormDropped,
    /// Triple form at (v' xi, u' eta, u zeta / r) against its reduced expression;
    /// bumps (xi, eta, zeta), |k| = 1 only.
    ReducedIa,
    /// Monotonicity form J(u' chi, v' chi) against its integrated-by-parts expression.
    Monotonicity,
}

impl IdentityKind {
    pub fn bumps(self) -> usize {
        if self == IdentityKind::ReducedIa {
            3
        } else {
            1
        }
    }
}

/// Both sides of an identity and the integral of |integrand| summed over both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityValue {
    pub lhs: f64,
    pub rhs: f64,
    pub scale: f64,
}

impl IdentityValue {
    /// |lhs - rhs| / scale (absolute when both sides vanish identically).
    pub fn error(&self) -> f64 {
        let d = (self.lhs - self.rhs).abs();
        if self.scale > 0.0 {
            d / self.scale
        } else {
            d
        }
    }
}

/// Field values at one quadrature point.
struct Pt {
    r: f64,
    u: [f64; 3],
    v: [f64; 3],
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
    h: f64,
}

impl Pt {
    fn delta(&self) -> f64 {
        self.d * self.e - self.c * self.c
    }
}

struct Fields<'a> {
    r: &'a [f64],
    cols: [Vec<f64>; 8],
}

impl<'a> Fields<'a> {
    fn new(p: &'a RadialProfile) -> Self {
        let col = |f: fn(&crate::types::MomentSet) -> f64| p.moments.iter().map(f).collect();
        Self {
            r: p.r(),
            cols: [
                p.u.clone(),
                p.v.clone(),
                col(|m| m.a),
                col(|m| m.b),
                col(|m| m.c),
                col(|m| m.d),
                col(|m| m.e),
                col(|m| m.h),
            ],
        }
    }

    fn at(&self, s: usize, x: f64) -> Pt {
        let nodes = &self.r[s..s + STENCIL];
        let w = fornberg(x, nodes, 2);
        let dot = |m: usize, c: usize| -> f64 {
            w[m].iter().zip(&self.cols[c][s..]).map(|(a, b)| a * b).sum()
        };
        Pt {
            r: x,
            u: [dot(0, 0), dot(1, 0), dot(2, 0)],
            v: [dot(0, 1), dot(1, 1), dot(2, 1)],
            a: dot(0, 2),
            b: dot(0, 3),
            c: dot(0, 4),
            d: dot(0, 5),
            e: dot(0, 6),
            h: dot(0, 7),
        }
    }
}

/// (lhs, rhs) integrands without the r dr measure.
fn integrand(kind: IdentityKind, q: &Pt, k2: f64, alpha: f64, bumps: &[[f64; 3]]) -> (f64, f64) {
    let r = q.r;
    let [u, u1, u2] = q.u;
    let [v, v1, v2] = q.v;
    let (a, b) = (q.a, q.b);
    let dl = q.delta();
    let s3 = 3f64.sqrt();
    let [et, et1, _] = bumps[0];
    let ab2 = 2.0 * a * b;
    match kind {
        IdentityKind::AForm => {
            let x = v * et;
            let dx = v1 * et + v * et1;
            (
                dx * dx + ((a + b) / ab2 - alpha) * x * x,
                (v * et1).powi(2) - (a - b) * u * v / (6.0 * a * b) * et * et,
            )
        }
        IdentityKind::BForm => {
            let x = u * et;
            let dx = u1 * et + u * et1;
            // (f - alpha u) / u + k^2 / r^2 with f from the closure relation
            let pot = (a + b) / ab2 - alpha + 3.0 * (a - b) * v / (ab2 * u) + k2 / (r * r);
            (dx * dx + pot * x * x, (u * et1).powi(2))
        }
        IdentityKind::CForm => {
            let x = v1 * et;
            let dx = v2 * et + v1 * et1;
            (
                dx * dx + (q.e / dl - alpha) * x * x,
                (v1 * et1).powi(2) - x * x / (r * r) + q.c * u1 * v1 / (s3 * dl) * et * et,
            )
        }
        IdentityKind::DForm | IdentityKind::DFormDropped => {
            let x = u1 * et;
            let dx = u2 * et + u1 * et1;
            let kept = if kind == IdentityKind::DForm { 1.0 } else { 0.0 };
            (
                dx * dx + (q.d / dl - alpha + k2 / (r * r)) * x * x,
                (u1 * et1).powi(2) - x * x / (r * r)
                    + kept * 2.0 * k2 * u * u1 * et * et / (r * r * r)
                    + s3 * q.c * u1 * v1 / dl * et * et,
            )
        }
        IdentityKind::GForm => {
            let x = u * et / r;
            let dx = (u1 / r - u / (r * r)) * et + u * et1 / r;
            (
                dx * dx + (k2 / (r * r) - alpha + 1.0 / q.h) * x * x,
                (u * et1 / r).powi(2) + et * et / r.powi(4) * (2.0 * r * u * u1 - u * u),
            )
        }
        IdentityKind::ReducedIa => {
            let [xi, xi1, _] = bumps[0];
            let [et, et1, _] = bumps[1];
            let [ze, ze1, _] = bumps[2];
            let a0 = v1 * xi;
            let a1 = u1 * et;
            let a2 = u * ze / r;
            let d0 = v2 * xi + v1 * xi1;
            let d1 = u2 * et + u1 * et1;
            let d2 = (u1 / r - u / (r * r)) * ze + u * ze1 / r;
            let ir2 = 1.0 / (r * r);
            let lhs = d0 * d0
                + d1 * d1
                + d2 * d2
                + a0 * a0 * (ir2 + q.e / dl - alpha)
                + a1 * a1 * (2.0 * ir2 + q.d / dl - alpha)
                + a2 * a2 * (2.0 * ir2 + 1.0 / q.h - alpha)
                - 4.0 * ir2 * a1 * a2
                - 2.0 * q.c / dl * a0 * a1;
            let rhs = (v1 * xi1).powi(2)
                + (u1 * et1).powi(2)
                + (u * ze1 / r).powi(2)
                + 2.0 * u * u1 / (r * r * r) * (et - ze).powi(2)
                + s3 * q.c * u1 * v1 / dl * (et - xi / s3).powi(2);
            (lhs, rhs)
        }
        IdentityKind::Monotonicity => {
            let (mu, nu) = (u1 * et, v1 * et);
            let (dmu, dnu) = (u2 * et + u1 * et1, v2 * et + v1 * et1);
            let lhs = dmu * dmu
                + 3.0 * dnu * dnu
                + mu * mu * (q.d / dl - alpha + k2 / (r * r))
                + 3.0 * nu * nu * (q.e / dl - alpha)
                - 2.0 * s3 * q.c / dl * mu * nu;
            let rhs = (u1 * et1).powi(2) + 3.0 * (v1 * et1).powi(2)
                - (u1 * u1 + 3.0 * v1 * v1) * et * et / (r * r)
                + 2.0 * k2 * u * u1 * et * et / (r * r * r);
            (2.0 * lhs, 2.0 * rhs)
        }
    }
}

/// Both sides of `kind` for the given bumps (see [`IdentityKind::bumps`]).
pub fn evaluate_identity(p: &RadialProfile, kind: IdentityKind, bumps: &[&Bump]) -> IdentityValue {
    assert_eq!(bumps.len(), kind.bumps(), "wrong number of bumps for {kind:?}");
    let fields = Fields::new(p);
    let r = p.r();
    let lo = bumps.iter().map(|b| b.lo).fold(f64::INFINITY, f64::min);
    let hi = bumps.iter().map(|b| b.hi).fold(f64::NEG_INFINITY, f64::max);
    let mut cuts: Vec<f64> = r.iter().copied().filter(|&x| x > lo && x < hi).collect();
    cuts.extend(bumps.iter().flat_map(|b| b.knots()));
    cuts.push(lo);
    cuts.push(hi);
    cuts.retain(|&x| x >= lo && x <= hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * hi);

    let rule = gauss_legendre(GAUSS);
    let (k2, alpha) = (p.k2(), p.alpha);
    let (mut l, mut rr, mut s) = (Neumaier::new(), Neumaier::new(), Neumaier::new());
    for w in cuts.windows(2) {
        let st = stencil_start(r, 0.5 * (w[0] + w[1]), STENCIL);
        let (xs, ws) = rule.mapped(w[0], w[1]);
        for (&x, &wt) in xs.iter().zip(&ws) {
            let q = fields.at(st, x);
            let vals: Vec<[f64; 3]> = bumps.iter().map(|b| b.eval(x)).collect();
            let (a, b) = integrand(kind, &q, k2, alpha, &vals);
            let m = wt * x;
            l.add(m * a);
            rr.add(m * b);
            s.add(m * (a.abs() + b.abs()));
        }
    }
    IdentityValue {
        lhs: l.value(),
        rhs: rr.value(),
        scale: s.value(),
    }
}

/// Reduced I^B identity on the discrete forms: the assembled reduced form at
/// (v zeta, u eta) against
/// sum kappa [u_i u_{i+1} (d eta)^2 + v_i v_{i+1} (d zeta)^2]
///   - sum w [(a-b)/(6ab) u v (3 eta + zeta)^2 + (k^2 - 1) (u eta)^2 / r^2].
/// Exact up to the discrete equilibrium residual of the profile.
pub fn reduced_ib_discrete(p: &RadialProfile, eta: &Bump, zeta: &Bump) -> IdentityValue {
    let r = p.r();
    let n = p.len();
    let geo = Geometry::new(r);
    let et: Vec<f64> = r.iter().map(|&x| eta.eval(x)[0]).collect();
    let ze: Vec<f64> = r.iter().map(|&x| zeta.eval(x)[0]).collect();
    let q0: Vec<f64> = (0..n).map(|i| p.v[i] * ze[i]).collect();
    let q1: Vec<f64> = (0..n).map(|i| p.u[i] * et[i]).collect();
    let block = assemble_ib_tilde(p);
    let lhs = block.value(&[&q0, &q1]);

    let k2 = p.k2();
    let mut rhs = Neumaier::new();
    let mut scale = Neumaier::new();
    for i in 0..n - 1 {
        let (de, dz) = (et[i + 1] - et[i], ze[i + 1] - ze[i]);
        let t = geo.kappa[i] * (p.u[i] * p.u[i + 1] * de * de + p.v[i] * p.v[i + 1] * dz * dz);
        rhs.add(t);
        scale.add(t.abs());
    }
    for i in 1..n - 1 {
        let m = &p.moments[i];
        let (u, v) = (p.u[i], p.v[i]);
        let t = geo.w[i]
            * ((m.a - m.b) / (6.0 * m.a * m.b) * u * v * (3.0 * et[i] + ze[i]).powi(2)
                + (k2 - 1.0) * (u * et[i]).powi(2) / (r[i] * r[i]));
        rhs.add(-t);
        scale.add(t.abs());
    }
    IdentityValue {
        lhs,
        rhs: rhs.value(),
        scale: scale.value() + lhs.abs(),
    }
}

struct Draws {
    single: Vec<Bump>,
    triple: Vec<[Bump; 3]>,
    pair: Vec<[Bump; 2]>,
}

fn draw(p: &RadialProfile, seed: u64, n_eta: usize) -> Draws {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let big_r = *p.r().last().expect("non-empty profile");
    let (lo, hi) = (END_BAND * big_r, (1.0 - END_BAND) * big_r);
    let mut one = || Bump::random(&mut rng, lo, hi, 0.2);
    let single = (0..n_eta).map(|_| one()).collect();
    let triple = (0..n_eta).map(|_| [one(), one(), one()]).collect();
    let pair = (0..n_eta).map(|_| [one(), one()]).collect();
    Draws {
        single,
        triple,
        pair,
    }
}

fn worst(values: impl Iterator<Item = IdentityValue>) -> (f64, usize) {
    values.fold((0.0, 0), |(m, n), v| {
        let e = v.error();
        (if e.is_nan() || m.is_nan() { f64::NAN } else { m.max(e) }, n + 1)
    })
}

fn location(id: &str) -> &'static str {
    match id {
        "integral.a_form" => {
            "int (v eta)'^2 + ((a+b)/(2ab) - alpha)(v eta)^2 = int (v eta')^2 - (a-b) u v eta^2/(6ab)"
        }
        "integral.b_form" => "int (u eta)'^2 + ((f - alpha u)/u + k^2/r^2)(u eta)^2 = int (u eta')^2",
        "integral.c_form" => {
            "int (v' eta)'^2 + (e/(de-c^2) - alpha)(v' eta)^2 = int (v' eta')^2 - (v' eta)^2/r^2 + c u' v' eta^2/(sqrt3 (de-c^2))"
        }
        "integral.d_form" => {
            "int (u' eta)'^2 + (d/(de-c^2) - alpha + k^2/r^2)(u' eta)^2 = int (u' eta')^2 - (u' eta)^2/r^2 + 2k^2 u u' eta^2/r^3 + sqrt3 c u' v' eta^2/(de-c^2)"
        }
        "integral.g_form" => {
            "int (u eta/r)'^2 + (k^2/r^2 - alpha + 1/h)(u eta/r)^2 = int (u eta'/r)^2 + eta^2 (2 r u u' - u^2)/r^4"
        }
        "integral.reduced_ia" => {
            "reduced triple form at (v' xi, u' eta, u zeta/r) = int (v' xi')^2 + (u' eta')^2 + (u zeta'/r)^2 + 2 u u' (eta - zeta)^2/r^3 + sqrt3 c u' v' (eta - xi/sqrt3)^2/(de-c^2)"
        }
        "integral.reduced_ib" => {
            "assembled reduced real form at (v zeta, u eta) = discrete sum of u u (d eta)^2 + v v (d zeta)^2 - (a-b) u v (3 eta + zeta)^2/(6ab) - (k^2-1)(u eta)^2/r^2"
        }
        "integral.zero_test_function" => "every form vanishes at eta = 0",
        "integral.negative_control" => "D-form with its 2k^2 u u' eta^2/r^3 term dropped must fail",
        _ => unreachable!(),
    }
}

/// Ledger of the integral identities on `p`, each checked on `n_eta` random bumps
/// (weighted-relative error, tolerance 1e-4).
pub fn run_integral(p: &RadialProfile, seed: u64, n_eta: usize) -> IdentityLedger {
    let n_eta = n_eta.max(1);
    let d = draw(p, seed, n_eta);
    let unit_k = p.k.unsigned_abs() == 1;
    let entries: Vec<LedgerEntry> = INTEGRAL_REGISTRY
        .par_iter()
        .map(|&id| {
            let loc = location(id);
            let single = |kind| worst(d.single.iter().map(|b| evaluate_identity(p, kind, &[b])));
            let (err, n) = match id {
                "integral.a_form" => single(IdentityKind::AForm),
                "integral.b_form" => single(IdentityKind::BForm),
                "integral.c_form" => single(IdentityKind::CForm),
                "integral.d_form" => single(IdentityKind::DForm),
                "integral.g_form" => single(IdentityKind::GForm),
                "integral.reduced_ib" => {
                    worst(d.pair.iter().map(|[e, z]| reduced_ib_discrete(p, e, z)))
                }
                "integral.reduced_ia" => {
                    if !unit_k {
                        return LedgerEntry {
                            identity_id: id.into(),
                            location: loc.into(),
                            max_error: None,
                            tolerance: TOL,
                            pass: true,
                            samples: 0,
                            note: Some("not applicable: the reduction holds for |k| = 1 only".into()),
                        };
                    }
                    worst(d.triple.iter().map(|[x, e, z]| {
                        evaluate_identity(p, IdentityKind::ReducedIa, &[x, e, z])
                    }))
                }
                "integral.zero_test_function" => {
                    let big_r = *p.r().last().expect("non-empty profile");
                    let z = Bump::zero(END_BAND * big_r, (1.0 - END_BAND) * big_r);
                    let mut vals: Vec<IdentityValue> = [
                        IdentityKind::AForm,
                        IdentityKind::BForm,
                        IdentityKind::CForm,
                        IdentityKind::DForm,
                        IdentityKind::GForm,
                    ]
                    .iter()
                    .map(|&k| evaluate_identity(p, k, &[&z]))
                    .collect();
                    vals.push(reduced_ib_discrete(p, &z, &z));
                    let abs = vals.iter().map(|v| v.lhs.abs().max(v.rhs.abs())).fold(0.0, f64::max);
                    let mut e = LedgerEntry::measured(id, loc, abs, 0.0, vals.len());
                    e.note = Some("error = largest |side| at eta = 0".into());
                    return e;
                }
                "integral.negative_control" => {
                    let (least, n) = d.single.iter().fold((f64::INFINITY, 0), |(m, n), b| {
                        let e = evaluate_identity(p, IdentityKind::DFormDropped, &[b]).error();
                        (m.min(e), n + 1)
                    });
                    return LedgerEntry {
                        identity_id: id.into(),
                        location: loc.into(),
                        max_error: Some(least),
                        tolerance: TOL,
                        pass: least > TOL,
                        samples: n,
                        note: Some(
                            "error = smallest error of the damaged identity; passes when it exceeds the tolerance on every bump".into(),
                        ),
                    };
                }
                _ => unreachable!(),
            };
            LedgerEntry::measured(id, loc, err, TOL, n)
        })
        .collect();
    IdentityLedger::sorted(seed, entries)
}
