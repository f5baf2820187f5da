//! Explicit negative directions of I^B for |k| > 1 from log-tent test functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{Geometry, RadialProfile, FAR_LOG_STEP};

use super::forms::{assemble_ib_mode, assemble_ib_tilde, ib_direct, QuadraticFormBlock};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Relative band around the bulk values that defines the far-field plateau.
    pub plateau_tol: f64,
    /// Half-widths W (in ln r) tried in order.
    pub widths: Vec<f64>,
    /// Gap in ln r kept between the tent support and R_0 / the outer boundary.
    pub margin: f64,
    /// The tent start is rounded up to a multiple of this step in ln r, so that on a
    /// far-field log lattice with a step dividing it every breakpoint is a node.
    pub log_step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            plateau_tol: 0.01,
            widths: vec![1.0, 1.5, 2.0, 3.0, 4.0, 6.0],
            margin: 0.05,
            log_step: FAR_LOG_STEP,
        }
    }
}

/// One member of the tent family and the forms evaluated on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeDirection {
    /// eta(r) = max(0, 1 - |ln r - s_c| / width).
    pub s_c: f64,
    pub width: f64,
    /// Start of the plateau where u, v are within `plateau_tol` of the bulk.
    pub r0: f64,
    pub support: (f64, f64),
    /// int {(u^2 + 9 v^2) eta'^2 - (k^2 - 1)(u eta)^2 / r^2} r dr.
    pub reduced_value: f64,
    /// Itilde(-3 v eta, u eta) from the assembled form.
    pub itilde_value: f64,
    /// Azimuthal modes carrying the escape direction u eta.
    pub escape_modes: Vec<i64>,
    /// I^B on the escape direction, assembled block and direct mode sum.
    pub ib_escape: f64,
    pub ib_escape_direct: f64,
    /// I^B on w_3 = q0 + q1 cos(phi), w_4 = q1 sin(phi) with (q0, q1) = (-3 v eta, u eta).
    pub ib_printed: f64,
}

impl NegativeDirection {
    pub fn is_negative(&self) -> bool {
        self.itilde_value < 0.0 && self.ib_escape < 0.0
    }
}

/// Smallest node radius beyond which u and v stay within `tol` (relative) of the bulk.
pub fn far_field_radius(p: &RadialProfile, tol: f64) -> Option<f64> {
    let b = p.bulk();
    let inside = |i: usize| {
        (p.u[i] / b.u - 1.0).abs() < tol && (p.v[i] / b.v - 1.0).abs() < tol
    };
    let n = p.len();
    let mut j = n;
    while j > 0 && inside(j - 1) {
        j -= 1;
    }
    (j < n).then(|| p.r()[j])
}

pub fn log_tent(r: &[f64], s_c: f64, width: f64) -> Vec<f64> {
    r.iter()
        .map(|&r| (1.0 - (r.ln() - s_c).abs() / width).max(0.0))
        .collect()
}

/// Closed form of Itilde(-3 v eta, u eta), discretised like the assembled forms.
pub fn reduced_instability_value(p: &RadialProfile, eta: &[f64]) -> f64 {
    let geo = Geometry::new(p.r());
    let k2 = p.k2();
    let n = p.len();
    let c1 = |i: usize| p.u[i] * p.u[i] + 9.0 * p.v[i] * p.v[i];
    let mut total = 0.0;
    for i in 0..n - 1 {
        let d = eta[i + 1] - eta[i];
        total += geo.kappa[i] * 0.5 * (c1(i) + c1(i + 1)) * d * d;
    }
    for i in 1..n - 1 {
        let r = p.r()[i];
        total -= geo.w[i] * (k2 - 1.0) * (p.u[i] * eta[i] / r).powi(2);
    }
    total
}

struct Forms {
    tilde: QuadraticFormBlock,
    escape: QuadraticFormBlock,
    modes: Vec<i64>,
}

fn forms(p: &RadialProfile) -> Forms {
    let k = p.k.unsigned_abs();
    let m = k.div_ceil(2);
    let modes = if k % 2 == 0 {
        vec![m as i64]
    } else {
        vec![m as i64, k as i64 - m as i64]
    };
    Forms {
        tilde: assemble_ib_tilde(p),
        escape: assemble_ib_mode(p, m),
        modes,
    }
}

fn evaluate(p: &RadialProfile, f: &Forms, s_c: f64, width: f64, r0: f64) -> NegativeDirection {
    let eta = log_tent(p.r(), s_c, width);
    let n = p.len();
    let q1: Vec<f64> = (0..n).map(|i| p.u[i] * eta[i]).collect();
    let q0: Vec<f64> = (0..n).map(|i| -3.0 * p.v[i] * eta[i]).collect();
    let zero = vec![0.0; n];
    let itilde_value = f.tilde.value(&[&q0, &q1]);
    let two_pi = 2.0 * std::f64::consts::PI;
    let (ib_escape, escape) = if f.modes.len() == 1 {
        (
            two_pi * f.escape.value(&[&q1, &zero]),
            vec![(f.modes[0], q1.clone(), zero.clone())],
        )
    } else {
        (
            two_pi * f.escape.value(&[&q1, &q1, &zero, &zero]),
            f.modes.iter().map(|&m| (m, q1.clone(), zero.clone())).collect(),
        )
    };
    let ib_escape_direct = ib_direct(p, &escape);
    let ib_printed = ib_direct(p, &[(0, q0, zero.clone()), (1, q1, zero)]);
    NegativeDirection {
        s_c,
        width,
        r0,
        support: ((s_c - width).exp(), (s_c + width).exp()),
        reduced_value: reduced_instability_value(p, &eta),
        itilde_value,
        escape_modes: f.modes.clone(),
        ib_escape,
        ib_escape_direct,
        ib_printed,
    }
}

/// Every tent of the family that fits between R_0 and the outer boundary.
pub fn tent_family(p: &RadialProfile, opts: &SearchOptions) -> Result<Vec<NegativeDirection>> {
    let r0 = far_field_radius(p, opts.plateau_tol)
        .ok_or_else(|| Error::NotFound("profile never reaches the far-field plateau".into()))?;
    let s_max = p.r()[p.len() - 1].ln() - opts.margin;
    let s_lo = if opts.log_step > 0.0 {
        ((r0.ln() + opts.margin) / opts.log_step).ceil() * opts.log_step
    } else {
        r0.ln() + opts.margin
    };
    let f = forms(p);
    Ok(opts
        .widths
        .iter()
        .filter(|&&w| s_lo + 2.0 * w <= s_max)
        .map(|&w| evaluate(p, &f, s_lo + w, w, r0))
        .collect())
}

/// First tent on which both Itilde(-3 v eta, u eta) and I^B on the escape direction are negative.
pub fn instability_search(p: &RadialProfile, opts: &SearchOptions) -> Result<NegativeDirection> {
    if p.k.unsigned_abs() < 2 {
        return Err(Error::InvalidInput("instability search needs |k| >= 2".into()));
    }
    let family = tent_family(p, opts)?;
    if family.is_empty() {
        return Err(Error::NotFound(format!(
            "no tent fits beyond the plateau: enlarge R_eff (currently {})",
            p.r()[p.len() - 1]
        )));
    }
    family
        .into_iter()
        .find(|d| d.is_negative())
        .ok_or_else(|| Error::NotFound("no negative value on the tent family".into()))
}
