//! Moments of the density exp(f(m1^2 - m2^2) + g(2m3^2 - m1^2 - m2^2)) / Z on S^2.
//!
//! With x = m3 = cos(theta) and X = m1^2 - m2^2 = (1 - x^2) cos(2 phi), the exponent is
//! f X + g (3x^2 - 1). Every integrand used here is even in x and in phi about 0 and
//! pi/2, so both schemes integrate over one octant and multiply by 8.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_gk, gauss_legendre, Neumaier};
use crate::types::{BinghamCoeffs, MomentSet, QuadratureSpec, Scheme};

/// Moments by the scheme named in `q`.
pub fn moments(b: BinghamCoeffs, q: &QuadratureSpec) -> Result<MomentSet> {
    match q.scheme {
        Scheme::ProductGauss2d => moments_product(b, q),
        Scheme::ThetaReduction1d => moments_theta_reduced(b, q),
    }
}

/// Raw sums over the octant, all relative to the weight exp(E - shift).
struct Sums {
    s0: f64,
    shift: f64,
    ex: f64,
    ey: f64,
    // centred second moments
    cxx: f64,
    cxy: f64,
    cyy: f64,
    // 2<m1^2 m3^2>, 2<m2^2 m3^2>, 2<m1^2 m2^2> before normalisation
    sa: f64,
    sb: f64,
    sh: f64,
}

fn finish(s: Sums, octant_factor: f64) -> MomentSet {
    let ln_z = (octant_factor * s.s0).ln() + s.shift;
    let sqrt3 = 3f64.sqrt();
    MomentSet {
        z: ln_z.exp(),
        ln_z,
        u: 0.5 * s.ex,
        v: (3.0 * s.ey - 1.0) / 6.0,
        a: 2.0 * s.sa / s.s0,
        b: 2.0 * s.sb / s.s0,
        h: 2.0 * s.sh / s.s0,
        c: 0.5 * sqrt3 * s.cxy,
        d: 1.5 * s.cyy,
        e: 0.5 * s.cxx,
    }
}

/// Product Gauss-Legendre rule in (cos theta, phi).
pub fn moments_product(b: BinghamCoeffs, q: &QuadratureSpec) -> Result<MomentSet> {
    b.check(q.cap)?;
    q.validate()?;
    let n = q.order;
    let rule = gauss_legendre(n);
    let (xs, wx) = rule.mapped(0.0, 1.0);
    let (ps, wp) = rule.mapped(0.0, FRAC_PI_2);
    let cs: Vec<f64> = ps.iter().map(|p| (2.0 * p).cos()).collect();
    let (cmin, cmax) = cs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    let (f, g) = (b.f, b.g);
    let fbest = if f >= 0.0 { f * cmax } else { f * cmin };
    let shift = xs
        .iter()
        .map(|&x| fbest * (1.0 - x * x) + g * (3.0 * x * x - 1.0))
        .fold(f64::NEG_INFINITY, f64::max);

    // First pass: weights, normaliser and means.
    let mut w = vec![0.0; n * n];
    let (mut s0, mut sx, mut sy) = (Neumaier::new(), Neumaier::new(), Neumaier::new());
    for i in 0..n {
        let x2 = xs[i] * xs[i];
        let s = 1.0 - x2;
        let gi = g * (3.0 * x2 - 1.0) - shift;
        for j in 0..n {
            let wij = wx[i] * wp[j] * (f * s * cs[j] + gi).exp();
            w[i * n + j] = wij;
            s0.add(wij);
            sx.add(wij * s * cs[j]);
            sy.add(wij * x2);
        }
    }
    let s0 = s0.value();
    if !(s0 > 0.0 && s0.is_finite()) {
        return Err(Error::QuadratureUnderresolved {
            field: "z",
            diff: f64::NAN,
        });
    }
    let ex = sx.value() / s0;
    let ey = sy.value() / s0;

    // Second pass: centred covariances and the pair moments.
    let mut acc = [Neumaier::new(); 6];
    for i in 0..n {
        let x2 = xs[i] * xs[i];
        let s = 1.0 - x2;
        let dy = x2 - ey;
        for j in 0..n {
            let wij = w[i * n + j];
            let dx = s * cs[j] - ex;
            acc[0].add(wij * dx * dx);
            acc[1].add(wij * dx * dy);
            acc[2].add(wij * dy * dy);
            acc[3].add(wij * 0.5 * s * (1.0 + cs[j]) * x2);
            acc[4].add(wij * 0.5 * s * (1.0 - cs[j]) * x2);
            acc[5].add(wij * 0.25 * s * s * (1.0 - cs[j] * cs[j]));
        }
    }
    Ok(finish(
        Sums {
            s0,
            shift,
            ex,
            ey,
            cxx: acc[0].value() / s0,
            cxy: acc[1].value() / s0,
            cyy: acc[2].value() / s0,
            sa: acc[3].value(),
            sb: acc[4].value(),
            sh: acc[5].value(),
        },
        8.0,
    ))
}

/// exp(-|y|) * int_0^{2pi} cos^j(2 phi) exp(y cos 2phi) dphi for j = 0, 1, 2.
fn scaled_kernels(y: f64) -> [f64; 3] {
    if y == 0.0 {
        return [2.0 * PI, 0.0, PI];
    }
    let ay = y.abs();
    // int_0^{2pi} F(cos 2phi) dphi = 2 int_0^pi F(cos t) dt
    let (v, _) = adaptive_gk(
        |t| {
            let c = t.cos();
            let w = (y * c - ay).exp();
            [w, w * c, w * c * c]
        },
        0.0,
        PI,
        1e-300,
        1e-15,
        400,
    );
    [2.0 * v[0], 2.0 * v[1], 2.0 * v[2]]
}

/// The phi-kernel 𝔞(x) = int_0^{2pi} exp(x cos 2phi) dphi and its derivative.
pub fn a_kernel(x: f64) -> Result<(f64, f64)> {
    a_kernel_capped(x, crate::types::F_MAX)
}

pub fn a_kernel_capped(x: f64, cap: f64) -> Result<(f64, f64)> {
    if !x.is_finite() || x.abs() > cap {
        return Err(Error::CapExceeded {
            f: x,
            g: 0.0,
            cap,
        });
    }
    let k = scaled_kernels(x);
    let s = x.abs().exp();
    Ok((k[0] * s, k[1] * s))
}

/// Gauss-Legendre in cos(theta); the phi integral is collapsed into 𝔞 and its
/// first two derivatives, evaluated adaptively.
pub fn moments_theta_reduced(b: BinghamCoeffs, q: &QuadratureSpec) -> Result<MomentSet> {
    b.check(q.cap)?;
    q.validate()?;
    let n = q.order;
    let rule = gauss_legendre(n);
    let (xs, wx) = rule.mapped(0.0, 1.0);
    let (f, g) = (b.f, b.g);
    let logw: Vec<f64> = xs
        .iter()
        .map(|&x| g * (3.0 * x * x - 1.0) + f.abs() * (1.0 - x * x))
        .collect();
    let shift = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kern: Vec<[f64; 3]> = xs.iter().map(|&x| scaled_kernels(f * (1.0 - x * x))).collect();
    let w: Vec<f64> = (0..n).map(|i| wx[i] * (logw[i] - shift).exp()).collect();

    let (mut s0, mut sx, mut sy) = (Neumaier::new(), Neumaier::new(), Neumaier::new());
    for i in 0..n {
        let x2 = xs[i] * xs[i];
        let s = 1.0 - x2;
        s0.add(w[i] * kern[i][0]);
        sx.add(w[i] * s * kern[i][1]);
        sy.add(w[i] * x2 * kern[i][0]);
    }
    let s0 = s0.value();
    let ex = sx.value() / s0;
    let ey = sy.value() / s0;

    let mut acc = [Neumaier::new(); 6];
    for i in 0..n {
        let x2 = xs[i] * xs[i];
        let s = 1.0 - x2;
        let dy = x2 - ey;
        let [k0, k1, k2] = kern[i];
        // (X - ex)^2 integrated over phi: s^2 k2 - 2 ex s k1 + ex^2 k0
        acc[0].add(w[i] * (s * s * k2 - 2.0 * ex * s * k1 + ex * ex * k0));
        acc[1].add(w[i] * (s * k1 - ex * k0) * dy);
        acc[2].add(w[i] * k0 * dy * dy);
        acc[3].add(w[i] * 0.5 * s * x2 * (k0 + k1));
        acc[4].add(w[i] * 0.5 * s * x2 * (k0 - k1));
        acc[5].add(w[i] * 0.25 * s * s * (k0 - k2));
    }
    // Kernels cover the full phi range, so only the x-symmetry factor 2 remains.
    Ok(finish(
        Sums {
            s0,
            shift,
            ex,
            ey,
            cxx: acc[0].value() / s0,
            cxy: acc[1].value() / s0,
            cyy: acc[2].value() / s0,
            sa: acc[3].value(),
            sb: acc[4].value(),
            sh: acc[5].value(),
        },
        2.0,
    ))
}

/// Relative disagreement used when cross-checking the two schemes.
///
/// Dimensionless moments are compared with a floor of 1e-3 on the scale so that
/// fields that vanish (u, c at f = 0) are compared absolutely.
pub fn field_discrepancy(m1: &MomentSet, m2: &MomentSet) -> (&'static str, f64) {
    let mut worst = ("z", (m1.ln_z - m2.ln_z).abs());
    for ((name, x1), (_, x2)) in m1.fields().iter().zip(m2.fields().iter()).skip(1) {
        let scale = x1.abs().max(x2.abs()).max(1e-3);
        let d = (x1 - x2).abs() / scale;
        if d > worst.1 {
            worst = (name, d);
        }
    }
    worst
}

/// Evaluates both schemes and fails with QUADRATURE_UNDERRESOLVED if they disagree by more than `tol`.
pub fn moments_cross_checked(b: BinghamCoeffs, order: usize, tol: f64) -> Result<MomentSet> {
    let m1 = moments_product(b, &QuadratureSpec::product(order))?;
    let m2 = moments_theta_reduced(b, &QuadratureSpec::theta_reduced(order))?;
    let (field, diff) = field_discrepancy(&m1, &m2);
    if diff > tol {
        return Err(Error::QuadratureUnderresolved { field, diff });
    }
    Ok(m1)
}
