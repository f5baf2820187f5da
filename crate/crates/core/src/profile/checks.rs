//! Residuals and post-solve invariant checks.

use serde::{Deserialize, Serialize};

use crate::closure::ClosureJacobian;
use crate::interp::fornberg;

use super::discrete::gradient;
use super::grid::Geometry;
use super::RadialProfile;

/// res_u = u'' + u'/r - k^2 u / r^2 - (f - alpha u), res_v = v'' + v'/r - (g - alpha v).
///
/// The second-order part is the conservative central difference
/// [kappa_{i}(u_{i+1} - u_i) - kappa_{i-1}(u_i - u_{i-1})] / w_i, which makes the
/// residual the mass-scaled negative gradient of the discrete energy. The last
/// node carries the boundary value and gets residual 0.
pub fn ode_residual(p: &RadialProfile) -> (Vec<f64>, Vec<f64>) {
    let geo = Geometry::new(p.r());
    let gr = gradient(&geo, p.k2(), p.alpha, &p.u, &p.v, &p.f, &p.g);
    let mut ru: Vec<f64> = gr.iter().zip(&geo.w).map(|(x, w)| -x[0] / (2.0 * w)).collect();
    let mut rv: Vec<f64> = gr.iter().zip(&geo.w).map(|(x, w)| -x[1] / (6.0 * w)).collect();
    ru.push(0.0);
    rv.push(0.0);
    (ru, rv)
}

/// max_i |res_i| min(1, r_i^2).
pub fn residual_norm(res: &[f64], r: &[f64]) -> f64 {
    res.iter()
        .zip(r)
        .map(|(x, r)| x.abs() * (r * r).min(1.0))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InvariantCheck {
    pub name: String,
    pub pass: bool,
    /// Node index of the worst offender (or of the first violation).
    pub worst_index: Option<usize>,
    pub worst_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InvariantReport {
    pub checks: Vec<InvariantCheck>,
}

impl InvariantReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| !c.pass)
    }
}

/// Records whether `value(i) > 0` on `idx`, keeping the smallest value.
fn positive(name: &str, idx: impl Iterator<Item = usize>, value: impl Fn(usize) -> f64) -> InvariantCheck {
    let mut worst = (None, f64::INFINITY);
    for i in idx {
        let x = value(i);
        if x < worst.1 || x.is_nan() {
            worst = (Some(i), x);
        }
    }
    InvariantCheck {
        name: name.to_string(),
        pass: worst.1 > 0.0,
        worst_index: worst.0,
        worst_value: worst.1,
    }
}

fn nonneg(name: &str, idx: impl Iterator<Item = usize>, value: impl Fn(usize) -> f64) -> InvariantCheck {
    let mut c = positive(name, idx, value);
    c.pass = c.worst_value >= 0.0;
    c
}

/// Central first derivative on the nodes (one-sided at the ends, u(0) = 0 for the first node).
fn nodal_slope(r: &[f64], x: &[f64], origin: Option<f64>) -> Vec<f64> {
    let n = r.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                match origin {
                    Some(x0) => {
                        let w = fornberg(r[0], &[0.0, r[0], r[1]], 1);
                        w[1][0] * x0 + w[1][1] * x[0] + w[1][2] * x[1]
                    }
                    None => (x[1] - x[0]) / (r[1] - r[0]),
                }
            } else if i == n - 1 {
                (x[n - 1] - x[n - 2]) / (r[n - 1] - r[n - 2])
            } else {
                let w = fornberg(r[i], &r[i - 1..=i + 1], 1);
                w[1][0] * x[i - 1] + w[1][1] * x[i] + w[1][2] * x[i + 1]
            }
        })
        .collect()
}

pub fn check_invariants(p: &RadialProfile) -> InvariantReport {
    let n = p.len();
    let r = p.r();
    let interior = || 0..n - 1;
    let bulk = p.bulk();
    let du = nodal_slope(r, &p.u, Some(0.0));
    let dv = nodal_slope(r, &p.v, None);
    let mut checks = vec![
        InvariantCheck {
            name: "boundary_values_exact".into(),
            pass: p.u[n - 1] == bulk.u && p.v[n - 1] == bulk.v,
            worst_index: Some(n - 1),
            worst_value: (p.u[n - 1] - bulk.u).abs().max((p.v[n - 1] - bulk.v).abs()),
        },
        positive("u_positive", interior(), |i| p.u[i]),
        positive("v_negative", interior(), |i| -p.v[i]),
        positive("three_v_plus_u_negative", interior(), |i| -(3.0 * p.v[i] + p.u[i])),
        positive("u_strictly_increasing", 0..n, |i| {
            if i == 0 {
                p.u[0]
            } else {
                p.u[i] - p.u[i - 1]
            }
        }),
        positive("v_strictly_decreasing", 1..n, |i| p.v[i - 1] - p.v[i]),
        positive("physical_region", 0..n, |i| {
            let e = crate::types::OrderParams::new(p.u[i], p.v[i]).eigenvalues();
            e.iter()
                .map(|&l| (l + 1.0 / 3.0).min(2.0 / 3.0 - l))
                .fold(f64::INFINITY, f64::min)
        }),
        nonneg("p_equals_u_du_nonnegative", interior(), |i| p.u[i] * du[i]),
        nonneg("q_nonnegative", interior(), |i| {
            let m = &p.moments[i];
            m.c * dv[i] / (p.u[i] * m.delta())
        }),
        positive("w_negative", interior(), |i| -(p.v[i] / p.u[i] + 1.0 / 3.0)),
    ];
    // u / r^|k| settles to a finite limit at the first nodes.
    let kk = p.k.unsigned_abs() as i32;
    let ratio = |i: usize| p.u[i] / r[i].powi(kk);
    let spread = (ratio(0) / ratio(5.min(n - 1)) - 1.0).abs();
    checks.push(InvariantCheck {
        name: "u_over_r_k_bounded_near_origin".into(),
        pass: spread.is_finite() && spread < 0.5,
        worst_index: Some(0),
        worst_value: spread,
    });
    // v'(0) = 0: the slope at the first node is negligible relative to the largest slope.
    let vmax = dv.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let v0 = dv[0].abs() / vmax;
    checks.push(InvariantCheck {
        name: "v_slope_vanishes_at_origin".into(),
        pass: v0 < 1e-2,
        worst_index: Some(0),
        worst_value: v0,
    });
    InvariantReport { checks }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThirdDerivativeReport {
    pub error_u: f64,
    pub error_v: f64,
    pub first_node: usize,
    pub last_node: usize,
}

impl ThirdDerivativeReport {
    pub fn max_error(&self) -> f64 {
        self.error_u.max(self.error_v)
    }
}

/// Checks the differentiated ODE system with derivatives from 7-point local stencils,
/// skipping 5% of the nodes at each end. Errors are relative to the largest term magnitude.
pub fn third_derivative_check(p: &RadialProfile) -> ThirdDerivativeReport {
    let n = p.len();
    let r = p.r();
    let k2 = p.k2();
    let a = p.alpha;
    let first = (n / 20).max(3);
    let last = n - 1 - (n / 20).max(3);
    let (mut eu, mut ev, mut su, mut sv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in first..=last {
        let lo = i - 3;
        let w = fornberg(r[i], &r[lo..lo + 7], 3);
        let d = |x: &[f64], m: usize| -> f64 { w[m].iter().zip(&x[lo..lo + 7]).map(|(a, b)| a * b).sum() };
        let (u, u1, u2, u3) = (p.u[i], d(&p.u, 1), d(&p.u, 2), d(&p.u, 3));
        let (v1, v2, v3) = (d(&p.v, 1), d(&p.v, 2), d(&p.v, 3));
        let j = ClosureJacobian::from_moments(&p.moments[i]);
        let ri = r[i];
        let tu = [
            u3,
            u2 / ri,
            -(1.0 + k2) * u1 / (ri * ri),
            2.0 * k2 * u / (ri * ri * ri),
            -(j.f_u - a) * u1,
            -j.f_v * v1,
        ];
        let tv = [v3, v2 / ri, -v1 / (ri * ri), -j.g_u * u1, -(j.g_v - a) * v1];
        eu = eu.max(tu.iter().sum::<f64>().abs());
        ev = ev.max(tv.iter().sum::<f64>().abs());
        su = su.max(tu.iter().map(|x| x.abs()).sum());
        sv = sv.max(tv.iter().map(|x| x.abs()).sum());
    }
    ThirdDerivativeReport {
        error_u: eu / su,
        error_v: ev / sv,
        first_node: first,
        last_node: last,
    }
}
