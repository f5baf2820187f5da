//! Closure relations and sign conditions on sampled coefficient and order-parameter states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::closure::{forward_jacobian, invert_full, ClosureJacobian, ClosureOptions};
use crate::sphere::moments;
use crate::types::{BinghamCoeffs, MomentSet, OrderParams, QuadratureSpec};

use super::{IdentityLedger, LedgerEntry};

pub const ALGEBRAIC_REGISTRY: [&str; 10] = [
    "algebraic.c_negative_for_f_positive",
    "algebraic.de_minus_c2_positive",
    "algebraic.f_relation",
    "algebraic.g_relation",
    "algebraic.inverse_round_trip",
    "algebraic.jacobian_consistency",
    "algebraic.negative_control",
    "algebraic.sign_u_equals_sign_f",
    "algebraic.u_equals_fh",
    "algebraic.zero_f_row",
];

/// Deliberate damage applied to every computed moment set (harness self-test).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    None,
    NegateC,
}

impl Corruption {
    fn apply(self, mut m: MomentSet) -> MomentSet {
        if self == Corruption::NegateC {
            m.c = -m.c;
        }
        m
    }
}

const RANGE: f64 = 50.0;
const REL_TOL: f64 = 1e-8;
const FD_TOL: f64 = 1e-6;
const ROUNDING_TOL: f64 = 1e-13;
const STATE_MARGIN: f64 = 0.02;

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

struct CoeffSample {
    f: f64,
    u_fh: f64,
    f_rel: f64,
    g_rel: f64,
    delta_ok: bool,
    c_ok: bool,
    sign_ok: bool,
    fd: f64,
}

fn eval(b: BinghamCoeffs, q: &QuadratureSpec, corr: Corruption) -> MomentSet {
    corr.apply(moments(b, q).expect("sample lies inside the cap"))
}

fn coeff_sample(b: BinghamCoeffs, q: &QuadratureSpec, corr: Corruption) -> CoeffSample {
    let m = eval(b, q, corr);
    let (f, g) = (b.f, b.g);
    let ab2 = 2.0 * m.a * m.b;
    let f1 = (m.a + m.b) * m.u / ab2;
    let f2 = 3.0 * (m.a - m.b) * m.v / ab2;
    let g1 = (m.a + m.b) * m.v / ab2;
    let g2 = (m.a - m.b) * m.u / (3.0 * ab2);
    let fh = f * m.h;

    // forward Jacobian against central differences of the moment map
    let step = 1e-5 * f.abs().max(g.abs()).max(1.0);
    let jac = forward_jacobian(&m);
    let mut fd: f64 = 0.0;
    let scale = jac.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    for (col, (df, dg)) in [(step, 0.0), (0.0, step)].into_iter().enumerate() {
        let p = eval(BinghamCoeffs::new(f + df, g + dg), q, corr);
        let n = eval(BinghamCoeffs::new(f - df, g - dg), q, corr);
        let du = (p.u - n.u) / (2.0 * step);
        let dv = (p.v - n.v) / (2.0 * step);
        fd = fd.max((du - jac[0][col]).abs() / scale);
        fd = fd.max((dv - jac[1][col]).abs() / scale);
    }

    CoeffSample {
        f,
        u_fh: ratio((m.u - fh).abs(), m.u.abs().max(fh.abs())),
        f_rel: ratio((f - f1 - f2).abs(), f.abs() + f1.abs() + f2.abs()),
        g_rel: ratio((g - g1 - g2).abs(), g.abs() + g1.abs() + g2.abs()),
        delta_ok: m.delta() > 0.0,
        c_ok: f <= 0.0 || m.c < 0.0,
        sign_ok: f == 0.0 || m.u * f > 0.0,
        fd,
    }
}

/// Round trip (u, v) -> (f, g) -> (u, v) and the product of the two Jacobians.
fn state_sample(t: OrderParams, opts: &ClosureOptions, corr: Corruption) -> (f64, f64) {
    let inv = match invert_full(t, opts) {
        Ok(inv) => inv,
        Err(_) => return (f64::INFINITY, f64::INFINITY),
    };
    let m = eval(inv.coeffs, &opts.quad, corr);
    let trip = (m.u - t.u).abs().max((m.v - t.v).abs());
    let fwd = forward_jacobian(&m);
    let back = ClosureJacobian::from_moments(&m).as_matrix();
    let mut defect: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let prod = back[i][0] * fwd[0][j] + back[i][1] * fwd[1][j];
            defect = defect.max((prod - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    (trip, defect)
}

fn random_state<R: Rng>(rng: &mut R) -> OrderParams {
    loop {
        let t = OrderParams::new(rng.gen_range(-0.5..0.5), rng.gen_range(-1.0 / 6.0..1.0 / 3.0));
        if t.is_physical(STATE_MARGIN) {
            return t;
        }
    }
}

fn fraction(flags: impl Iterator<Item = bool>) -> (f64, usize) {
    let (bad, n) = flags.fold((0usize, 0usize), |(b, n), ok| (b + !ok as usize, n + 1));
    (if n == 0 { 0.0 } else { bad as f64 / n as f64 }, n)
}

fn max_of(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, |m, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x) })
}

/// Every algebraic entry except the negative control, under the given corruption.
pub fn run_algebraic_with(seed: u64, n_samples: usize, corruption: Corruption) -> IdentityLedger {
    let opts = ClosureOptions::default();
    let q = opts.quad;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<BinghamCoeffs> = (0..n_samples)
        .map(|_| BinghamCoeffs::new(rng.gen_range(-RANGE..=RANGE), rng.gen_range(-RANGE..=RANGE)))
        .collect();
    let states: Vec<OrderParams> = (0..n_samples).map(|_| random_state(&mut rng)).collect();
    let zero_row: Vec<f64> = (0..n_samples.clamp(1, 20))
        .map(|_| rng.gen_range(-RANGE..=RANGE))
        .collect();

    let cs: Vec<CoeffSample> = coeffs.par_iter().map(|&b| coeff_sample(b, &q, corruption)).collect();
    let ss: Vec<(f64, f64)> = states.par_iter().map(|&t| state_sample(t, &opts, corruption)).collect();
    let zr = max_of(zero_row.iter().map(|&g| {
        let m = eval(BinghamCoeffs::new(0.0, g), &q, corruption);
        m.u.abs().max(m.c.abs())
    }));

    let n = n_samples;
    let mut entries = vec![
        LedgerEntry::measured(
            "algebraic.u_equals_fh",
            "u = f h (relative)",
            max_of(cs.iter().map(|s| s.u_fh)),
            REL_TOL,
            n,
        ),
        LedgerEntry::measured(
            "algebraic.f_relation",
            "f = (a+b) u / (2ab) + 3 (a-b) v / (2ab) (relative to the sum of term magnitudes)",
            max_of(cs.iter().map(|s| s.f_rel)),
            REL_TOL,
            n,
        ),
        LedgerEntry::measured(
            "algebraic.g_relation",
            "g = (a+b) v / (2ab) + (a-b) u / (6ab) (relative to the sum of term magnitudes)",
            max_of(cs.iter().map(|s| s.g_rel)),
            REL_TOL,
            n,
        ),
        LedgerEntry::measured(
            "algebraic.jacobian_consistency",
            "d(u,v)/d(f,g) = [[e, sqrt3 c], [c/sqrt3, d]] against central differences, and its product with d(f,g)/d(u,v) = identity",
            max_of(cs.iter().map(|s| s.fd).chain(ss.iter().map(|s| s.1))),
            FD_TOL,
            2 * n,
        ),
        LedgerEntry::measured(
            "algebraic.inverse_round_trip",
            "moments(invert(u, v)) = (u, v) for physical states with eigenvalue margin 0.02",
            max_of(ss.iter().map(|s| s.0)),
            REL_TOL,
            n,
        ),
        LedgerEntry::measured(
            "algebraic.zero_f_row",
            "f = 0 gives u = 0 and c = 0 to rounding",
            zr,
            ROUNDING_TOL,
            zero_row.len(),
        ),
    ];
    let signs: [(&str, &str, Box<dyn Fn(&CoeffSample) -> Option<bool>>); 3] = [
        (
            "algebraic.de_minus_c2_positive",
            "de - c^2 > 0",
            Box::new(|s| Some(s.delta_ok)),
        ),
        (
            "algebraic.c_negative_for_f_positive",
            "f > 0 implies c < 0",
            Box::new(|s| (s.f > 0.0).then_some(s.c_ok)),
        ),
        (
            "algebraic.sign_u_equals_sign_f",
            "sign(u) = sign(f)",
            Box::new(|s| Some(s.sign_ok)),
        ),
    ];
    for (id, loc, pick) in signs {
        let (frac, count) = fraction(cs.iter().filter_map(|s| pick(s)));
        let mut e = LedgerEntry::measured(id, loc, frac, 0.0, count);
        e.note = Some("error = fraction of samples violating the condition".into());
        entries.push(e);
    }
    IdentityLedger::sorted(seed, entries)
}

/// Full algebraic ledger on `n_samples` coefficient samples in [-50, 50]^2 and as many
/// physical (u, v) states. The negative control reruns the checks with c negated and
/// passes when that run fails.
pub fn run_algebraic(seed: u64, n_samples: usize) -> IdentityLedger {
    let mut ledger = run_algebraic_with(seed, n_samples, Corruption::None);
    let corrupt = run_algebraic_with(seed, n_samples.clamp(1, 40), Corruption::NegateC);
    let failed: Vec<&str> = corrupt
        .entries
        .iter()
        .filter(|e| !e.pass)
        .map(|e| e.identity_id.as_str())
        .collect();
    ledger.entries.push(LedgerEntry {
        identity_id: "algebraic.negative_control".into(),
        location: "checks rerun with c negated must fail".into(),
        max_error: Some(failed.len() as f64),
        tolerance: 1.0,
        pass: !failed.is_empty(),
        samples: corrupt.entries.len(),
        note: Some(format!(
            "error = number of corrupted checks that failed (pass requires at least 1): {}",
            failed.join(", ")
        )),
    });
    IdentityLedger::sorted(seed, ledger.entries)
}
