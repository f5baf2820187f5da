//! Discrete reduced energy: exact gradient energy of piecewise-linear fields plus
//! lumped zero-order terms, and its gradient and block-tridiagonal Hessian.

use crate::closure::ClosureJacobian;
use crate::quadrature::Neumaier;
use crate::types::MomentSet;

use super::grid::{core_kappa, Geometry};
use super::RadialProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub gradient: f64,
    pub centrifugal: f64,
    pub bulk: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.gradient + self.centrifugal + self.bulk
    }
}

#[inline]
pub(crate) fn psi(u: f64, v: f64, f: f64, g: f64, ln_z: f64, alpha: f64) -> f64 {
    2.0 * f * u + 6.0 * g * v - ln_z - alpha * (u * u + 3.0 * v * v)
}

/// Energy terms restricted to nodes with index < `upto` (cells wholly inside).
#[allow(clippy::too_many_arguments)]
pub(crate) fn energy_terms(
    geo: &Geometry,
    k2: f64,
    alpha: f64,
    u: &[f64],
    v: &[f64],
    f: &[f64],
    g: &[f64],
    ln_z: &[f64],
    upto: usize,
) -> EnergyParts {
    let mut grad = Neumaier::new();
    let mut cent = Neumaier::new();
    let mut bulk = Neumaier::new();
    grad.add(core_kappa(k2) * u[0] * u[0]);
    for i in 0..upto {
        if i + 1 < upto {
            let du = u[i + 1] - u[i];
            let dv = v[i + 1] - v[i];
            grad.add(geo.kappa[i] * (du * du + 3.0 * dv * dv));
        }
        let r = geo.r[i];
        cent.add(geo.centrifugal_weight(i, k2) * k2 * u[i] * u[i] / (r * r));
        bulk.add(geo.w[i] * psi(u[i], v[i], f[i], g[i], ln_z[i], alpha));
    }
    EnergyParts {
        gradient: grad.value(),
        centrifugal: cent.value(),
        bulk: bulk.value(),
    }
}

pub fn energy_parts(p: &RadialProfile) -> EnergyParts {
    let geo = Geometry::new(p.r());
    let ln_z: Vec<f64> = p.moments.iter().map(|m| m.ln_z).collect();
    energy_terms(&geo, p.k2(), p.alpha, &p.u, &p.v, &p.f, &p.g, &ln_z, p.len())
}

/// Discrete value of the reduced energy on [0, R].
pub fn reduced_energy(p: &RadialProfile) -> f64 {
    energy_parts(p).total()
}

/// Reduced energy restricted to nodes with r <= `radius`.
pub fn window_energy(p: &RadialProfile, radius: f64) -> f64 {
    let geo = Geometry::new(p.r());
    let ln_z: Vec<f64> = p.moments.iter().map(|m| m.ln_z).collect();
    let upto = p.r().partition_point(|&r| r <= radius * (1.0 + 1e-12));
    energy_terms(&geo, p.k2(), p.alpha, &p.u, &p.v, &p.f, &p.g, &ln_z, upto).total()
}

/// Gradient of the discrete energy at the free nodes 0..n-1 (the last node is Dirichlet).
#[allow(clippy::too_many_arguments)]
pub(crate) fn gradient(
    geo: &Geometry,
    k2: f64,
    alpha: f64,
    u: &[f64],
    v: &[f64],
    f: &[f64],
    g: &[f64],
) -> Vec<[f64; 2]> {
    let n = u.len();
    let mut out = vec![[0.0; 2]; n - 1];
    for (i, o) in out.iter_mut().enumerate() {
        let (left_u, left_v) = if i == 0 {
            (2.0 * core_kappa(k2) * u[0], 0.0)
        } else {
            let kl = geo.kappa[i - 1];
            (2.0 * kl * (u[i] - u[i - 1]), 6.0 * kl * (v[i] - v[i - 1]))
        };
        let kr = geo.kappa[i];
        let r = geo.r[i];
        o[0] = left_u - 2.0 * kr * (u[i + 1] - u[i])
            + 2.0 * geo.centrifugal_weight(i, k2) * k2 * u[i] / (r * r)
            + 2.0 * geo.w[i] * (f[i] - alpha * u[i]);
        o[1] = left_v - 6.0 * kr * (v[i + 1] - v[i]) + 6.0 * geo.w[i] * (g[i] - alpha * v[i]);
    }
    out
}

/// Block-tridiagonal Hessian: `diag[i]` for free node i, `off[i]` couples i and i+1
/// (diagonal 2x2, stored as its two entries).
pub(crate) struct Hessian {
    pub diag: Vec<[[f64; 2]; 2]>,
    pub off: Vec<[f64; 2]>,
}

pub(crate) fn hessian(geo: &Geometry, k2: f64, alpha: f64, m: &[MomentSet]) -> Hessian {
    let n = m.len() - 1;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n {
        let j = ClosureJacobian::from_moments(&m[i]);
        let (ku, kv) = if i == 0 {
            (2.0 * core_kappa(k2), 0.0)
        } else {
            (2.0 * geo.kappa[i - 1], 6.0 * geo.kappa[i - 1])
        };
        let kr = geo.kappa[i];
        let w = geo.w[i];
        let r = geo.r[i];
        let wc = geo.centrifugal_weight(i, k2);
        // 2 f_v = 6 g_u; symmetrise to rounding.
        let cross = w * (j.f_v + 3.0 * j.g_u);
        diag.push([
            [ku + 2.0 * kr + 2.0 * wc * k2 / (r * r) + 2.0 * w * (j.f_u - alpha), cross],
            [cross, kv + 6.0 * kr + 6.0 * w * (j.g_v - alpha)],
        ]);
        if i + 1 < n {
            off.push([-2.0 * kr, -6.0 * kr]);
        }
    }
    Hessian { diag, off }
}

fn inv2(a: &[[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if !(a[0][0] > 0.0 && det > 0.0) {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

/// Solves (H + shift * M) x = rhs with M = diag(2 w_i, 6 w_i); `None` if not positive definite.
pub(crate) fn solve_shifted(
    h: &Hessian,
    w: &[f64],
    shift: f64,
    rhs: &[[f64; 2]],
) -> Option<Vec<[f64; 2]>> {
    let n = h.diag.len();
    let mut sinv: Vec<[[f64; 2]; 2]> = Vec::with_capacity(n);
    let mut y = vec![[0.0; 2]; n];
    for i in 0..n {
        let mut s = h.diag[i];
        s[0][0] += shift * 2.0 * w[i];
        s[1][1] += shift * 6.0 * w[i];
        let mut b = rhs[i];
        if i > 0 {
            let c = h.off[i - 1];
            let p = &sinv[i - 1];
            // S_i -= C^T S_{i-1}^{-1} C with C diagonal
            s[0][0] -= c[0] * p[0][0] * c[0];
            s[0][1] -= c[0] * p[0][1] * c[1];
            s[1][0] -= c[1] * p[1][0] * c[0];
            s[1][1] -= c[1] * p[1][1] * c[1];
            let yp = y[i - 1];
            let t0 = p[0][0] * yp[0] + p[0][1] * yp[1];
            let t1 = p[1][0] * yp[0] + p[1][1] * yp[1];
            b[0] -= c[0] * t0;
            b[1] -= c[1] * t1;
        }
        sinv.push(inv2(&s)?);
        y[i] = b;
    }
    // back substitution: x_i = S_i^{-1} (y_i - C_i x_{i+1})
    let mut x = vec![[0.0; 2]; n];
    for i in (0..n).rev() {
        let mut b = y[i];
        if i + 1 < n {
            let c = h.off[i];
            b[0] -= c[0] * x[i + 1][0];
            b[1] -= c[1] * x[i + 1][1];
        }
        let p = &sinv[i];
        x[i] = [p[0][0] * b[0] + p[0][1] * b[1], p[1][0] * b[0] + p[1][1] * b[1]];
    }
    Some(x)
}
