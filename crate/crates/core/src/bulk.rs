//! Singular bulk potential on the (u, v) slice and its uniaxial critical points.

use serde::{Deserialize, Serialize};

use crate::closure::{invert_full, ClosureJacobian, ClosureOptions};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, Neumaier};
use crate::types::OrderParams;

pub const ETA_CAP: f64 = 500.0;
pub const DEFAULT_S2_ORDER: usize = 32;

/// Panel breakpoints on [0, 1], graded geometrically toward both ends.
fn panels() -> Vec<f64> {
    let mut b = vec![0.0];
    for j in (2..=12).rev() {
        b.push(0.5f64.powi(j));
    }
    b.push(0.5);
    for j in 2..=12 {
        b.push(1.0 - 0.5f64.powi(j));
    }
    b.push(1.0);
    b
}

/// int_0^1 x^{2p} exp(eta x^2 - shift) dx for p = 0, 1, 2, with shift = max(eta, 0).
fn even_moments(eta: f64, order: usize) -> [f64; 3] {
    let rule = gauss_legendre(order);
    let shift = eta.max(0.0);
    let br = panels();
    let mut acc = [Neumaier::new(); 3];
    for w in br.windows(2) {
        let (xs, ws) = rule.mapped(w[0], w[1]);
        for (x, wt) in xs.iter().zip(&ws) {
            let x2 = x * x;
            let e = wt * (eta * x2 - shift).exp();
            acc[0].add(e);
            acc[1].add(e * x2);
            acc[2].add(e * x2 * x2);
        }
    }
    [acc[0].value(), acc[1].value(), acc[2].value()]
}

fn check_eta(eta: f64) -> Result<()> {
    if !eta.is_finite() || eta.abs() > ETA_CAP {
        return Err(Error::CapExceeded {
            f: eta,
            g: 0.0,
            cap: ETA_CAP,
        });
    }
    Ok(())
}

/// s2(eta) = <(3x^2 - 1)/2> under exp(eta x^2) on [-1, 1].
pub fn s2(eta: f64) -> Result<f64> {
    s2_with_order(eta, DEFAULT_S2_ORDER)
}

pub fn s2_with_order(eta: f64, order: usize) -> Result<f64> {
    check_eta(eta)?;
    let m = even_moments(eta, order);
    Ok(0.5 * (3.0 * m[1] / m[0] - 1.0))
}

/// ds2/deta = (3/2) Var(x^2).
pub fn s2_derivative(eta: f64, order: usize) -> Result<f64> {
    check_eta(eta)?;
    let m = even_moments(eta, order);
    let mean = m[1] / m[0];
    Ok(1.5 * (m[2] / m[0] - mean * mean))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalPointSet {
    pub alpha: f64,
    pub eta_roots: Vec<f64>,
    pub s2_values: Vec<f64>,
    pub classification: Vec<Stability>,
}

impl CriticalPointSet {
    /// Largest root (the uniaxial branch that is stable above the threshold).
    pub fn eta1(&self) -> Option<f64> {
        self.eta_roots.last().copied().filter(|&e| e > 0.0)
    }
}

/// Minimiser of eta / s2(eta) on eta > 0; its value is the bifurcation threshold.
pub fn tangency(order: usize) -> Result<(f64, f64)> {
    let phi = |e: f64| -> Result<f64> { Ok(e / s2_with_order(e, order)?) };
    let (mut a, mut b) = (0.5, 6.0);
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (phi(c)?, phi(d)?);
    while b - a > 1e-9 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = phi(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = phi(d)?;
        }
    }
    let e = 0.5 * (a + b);
    Ok((phi(e)?, e))
}

fn scan_grid(order: usize) -> Result<Vec<f64>> {
    let mut g: Vec<f64> = Vec::with_capacity(5000);
    for i in 0..=800 {
        g.push(-100.0 + 100.0 * i as f64 / 800.0 - 1e-6 * (i == 800) as i32 as f64);
    }
    for i in 0..=4000 {
        g.push(1e-6 + (ETA_CAP - 1e-6) * i as f64 / 4000.0);
    }
    g.push(tangency(order)?.1);
    g.retain(|&x| x != 0.0);
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

fn polish(alpha: f64, mut lo: f64, mut hi: f64, order: usize) -> Result<f64> {
    let fz = |e: f64| -> Result<f64> { Ok(e - alpha * s2_with_order(e, order)?) };
    let flo = fz(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = fz(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 * (1.0 + mid.abs()) {
            break;
        }
    }
    let mut e = 0.5 * (lo + hi);
    for _ in 0..4 {
        let fe = fz(e)?;
        let dfe = 1.0 - alpha * s2_derivative(e, order)?;
        if dfe == 0.0 {
            break;
        }
        let next = e - fe / dfe;
        if !(next > lo - 1e-9 && next < hi + 1e-9) {
            break;
        }
        e = next;
    }
    Ok(e)
}

/// All roots of eta = alpha s2(eta) on [-100, 500], sorted and classified.
pub fn critical_points(alpha: f64) -> Result<CriticalPointSet> {
    critical_points_with(alpha, DEFAULT_S2_ORDER)
}

pub fn critical_points_with(alpha: f64, order: usize) -> Result<CriticalPointSet> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    let grid = scan_grid(order)?;
    let vals: Vec<f64> = grid
        .iter()
        .map(|&e| Ok(e - alpha * s2_with_order(e, order)?))
        .collect::<Result<_>>()?;
    let mut roots = vec![0.0];
    for i in 0..grid.len() - 1 {
        let (a, b) = (grid[i], grid[i + 1]);
        if a < 0.0 && b > 0.0 {
            continue; // the exact root at 0 sits between these two points
        }
        if (vals[i] > 0.0) != (vals[i + 1] > 0.0) {
            roots.push(polish(alpha, a, b, order)?);
        }
    }
    roots.sort_by(f64::total_cmp);
    let s2v: Vec<f64> = roots
        .iter()
        .map(|&e| s2_with_order(e, order))
        .collect::<Result<_>>()?;
    let eta1 = roots.last().copied().filter(|&e| e > 0.0);
    let classification = roots
        .iter()
        .map(|&e| {
            let is_eta1 = Some(e) == eta1;
            let stable = if alpha > 7.5 {
                is_eta1
            } else {
                e == 0.0 || is_eta1
            };
            if stable {
                Stability::Stable
            } else {
                Stability::Unstable
            }
        })
        .collect();
    Ok(CriticalPointSet {
        alpha,
        eta_roots: roots,
        s2_values: s2v,
        classification,
    })
}

/// Bifurcation threshold by bisection on the change of root count (1 -> 3).
pub fn bifurcation_threshold(order: usize, width: f64) -> Result<f64> {
    let count = |a: f64| -> Result<usize> { Ok(critical_points_with(a, order)?.eta_roots.len()) };
    let (mut lo, mut hi) = (6.0, 7.5);
    if count(lo)? != 1 || count(hi - 1e-3)? < 3 {
        return Err(Error::NotFound("threshold bracket [6, 7.5) invalid".into()));
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if count(mid)? >= 3 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bulk uniaxial minimiser (s2(eta1)/2, -s2(eta1)/6) and s2(eta1).
pub fn bulk_state(alpha: f64) -> Result<(f64, OrderParams)> {
    let cp = critical_points(alpha)?;
    let eta1 = cp
        .eta1()
        .ok_or_else(|| Error::NotFound(format!("no positive root for alpha = {alpha}")))?;
    let s = s2(eta1)?;
    Ok((s, OrderParams::new(s / 2.0, -s / 6.0)))
}

/// Value, gradient and Hessian of f_S = 2fu + 6gv - ln Z - alpha (u^2 + 3v^2).
#[derive(Debug, Clone, Copy)]
pub struct BulkEval {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    pub f: f64,
    pub g: f64,
}

pub fn bulk_eval(p: OrderParams, alpha: f64, opts: &ClosureOptions) -> Result<BulkEval> {
    let inv = invert_full(p, opts)?;
    Ok(bulk_from(p, alpha, inv.coeffs.f, inv.coeffs.g, inv.moments.ln_z, &ClosureJacobian::from_moments(&inv.moments)))
}

pub fn bulk_from(p: OrderParams, alpha: f64, f: f64, g: f64, ln_z: f64, j: &ClosureJacobian) -> BulkEval {
    let (u, v) = (p.u, p.v);
    BulkEval {
        value: 2.0 * f * u + 6.0 * g * v - ln_z - alpha * (u * u + 3.0 * v * v),
        grad: [2.0 * (f - alpha * u), 6.0 * (g - alpha * v)],
        hess: [
            [2.0 * (j.f_u - alpha), 2.0 * j.f_v],
            [6.0 * j.g_u, 6.0 * (j.g_v - alpha)],
        ],
        f,
        g,
    }
}

pub fn bulk_density(p: OrderParams, alpha: f64) -> Result<f64> {
    Ok(bulk_eval(p, alpha, &ClosureOptions::default())?.value)
}
