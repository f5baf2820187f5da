//! Projected Newton descent on the discrete reduced energy.

use serde::{Deserialize, Serialize};

use crate::bulk::bulk_state;
use crate::closure::{ClosureOptions, Inverted};
use crate::error::{Error, Result};
use crate::types::{BinghamCoeffs, OrderParams};

use super::checks::{check_invariants, ode_residual, residual_norm};
use super::discrete::{energy_terms, gradient, hessian, solve_shifted};
use super::grid::{Geometry, RadialGrid, DEFAULT_RATIO, FAR_LOG_STEP};
use super::{invert_nodes, window_energy, RadialProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Stop when the weighted max of the mass-scaled gradient falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Physical-region margin enforced by the projection.
    pub margin: f64,
    pub closure: ClosureOptions,
    /// r_0 in the initial profile r^|k| / (r^|k| + r_0^|k|).
    pub init_r0: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 400,
            margin: 1e-7,
            closure: ClosureOptions::default(),
            init_r0: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub energy_history: Vec<f64>,
    pub residual_history: Vec<f64>,
    /// Largest Levenberg shift used.
    pub max_shift: f64,
}

fn validate(alpha: f64, k: i32) -> Result<()> {
    if !(alpha > 7.5 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha must exceed 7.5, got {alpha}")));
    }
    if k == 0 {
        return Err(Error::InvalidInput("winding number k must be nonzero".into()));
    }
    Ok(())
}

/// u0 = (s2/2) r^|k| / (r^|k| + r0^|k|), v0 = -(s2/6) r^2 / (r^2 + 1), exact at the last node.
pub fn initial_profile(grid: &RadialGrid, k: i32, s2: f64, r0: f64) -> (Vec<f64>, Vec<f64>) {
    let kk = k.unsigned_abs() as i32;
    let n = grid.len();
    let mut u: Vec<f64> = grid
        .r
        .iter()
        .map(|&r| 0.5 * s2 * r.powi(kk) / (r.powi(kk) + r0.powi(kk)))
        .collect();
    let mut v: Vec<f64> = grid.r.iter().map(|&r| -s2 / 6.0 * r * r / (r * r + 1.0)).collect();
    u[n - 1] = s2 / 2.0;
    v[n - 1] = -s2 / 6.0;
    (u, v)
}

struct State {
    u: Vec<f64>,
    v: Vec<f64>,
    inv: Vec<Inverted>,
    energy: f64,
}

struct Problem<'a> {
    geo: Geometry,
    k2: f64,
    alpha: f64,
    opts: &'a SolveOptions,
}

impl Problem<'_> {
    fn evaluate(&self, u: Vec<f64>, v: Vec<f64>, warm: &[Inverted]) -> Result<State> {
        let starts: Vec<BinghamCoeffs> = warm.iter().map(|x| x.coeffs).collect();
        self.evaluate_from(u, v, &starts)
    }

    fn evaluate_from(&self, u: Vec<f64>, v: Vec<f64>, starts: &[BinghamCoeffs]) -> Result<State> {
        let inv = invert_nodes(&u, &v, starts, &self.opts.closure)?;
        let (f, g, lz) = split(&inv);
        let energy = energy_terms(&self.geo, self.k2, self.alpha, &u, &v, &f, &g, &lz, u.len()).total();
        Ok(State { u, v, inv, energy })
    }

    fn gradient(&self, s: &State) -> Vec<[f64; 2]> {
        let (f, g, _) = split(&s.inv);
        gradient(&self.geo, self.k2, self.alpha, &s.u, &s.v, &f, &g)
    }

    fn residual(&self, gr: &[[f64; 2]]) -> f64 {
        gr.iter()
            .enumerate()
            .map(|(i, x)| {
                let r = self.geo.r[i];
                let wt = (r * r).min(1.0) / self.geo.w[i];
                (x[0].abs() / 2.0).max(x[1].abs() / 6.0) * wt
            })
            .fold(0.0, f64::max)
    }

    fn project(&self, u: &mut [f64], v: &mut [f64]) {
        let n = u.len();
        for i in 0..n - 1 {
            let p = OrderParams::new(u[i], v[i]).clamp_physical(self.opts.margin, 0.0);
            u[i] = p.u;
            v[i] = p.v;
        }
    }
}

fn split(inv: &[Inverted]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        inv.iter().map(|x| x.coeffs.f).collect(),
        inv.iter().map(|x| x.coeffs.g).collect(),
        inv.iter().map(|x| x.moments.ln_z).collect(),
    )
}

fn minimise(
    prob: &Problem,
    mut s: State,
    report: &mut SolveReport,
) -> Result<State> {
    let opts = prob.opts;
    let n = s.u.len();
    let mut shift: f64 = 0.0;
    let mut gr = prob.gradient(&s);
    let mut res = prob.residual(&gr);
    report.energy_history.push(s.energy);
    report.residual_history.push(res);
    let mut stalls = 0;
    while res > opts.tol {
        if report.iterations >= opts.max_iter {
            return Err(Error::NoConvergence {
                iterations: report.iterations,
                residual: res,
            });
        }
        report.iterations += 1;
        let moments: Vec<_> = s.inv.iter().map(|x| x.moments).collect();
        let h = hessian(&prob.geo, prob.k2, prob.alpha, &moments);
        let rhs: Vec<[f64; 2]> = gr.iter().map(|x| [-x[0], -x[1]]).collect();
        let dir = loop {
            if let Some(d) = solve_shifted(&h, &prob.geo.w, shift, &rhs) {
                break d;
            }
            shift = if shift == 0.0 { 0.1 } else { shift * 4.0 };
            if shift > 1e12 {
                return Err(Error::NoConvergence {
                    iterations: report.iterations,
                    residual: res,
                });
            }
        };
        report.max_shift = report.max_shift.max(shift);

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut u = s.u.clone();
            let mut v = s.v.clone();
            for i in 0..n - 1 {
                u[i] += t * dir[i][0];
                v[i] += t * dir[i][1];
            }
            prob.project(&mut u, &mut v);
            let slope: f64 = (0..n - 1)
                .map(|i| gr[i][0] * (u[i] - s.u[i]) + gr[i][1] * (v[i] - s.v[i]))
                .sum();
            if let Ok(trial) = prob.evaluate(u, v, &s.inv) {
                let noise = 1e-13 * s.energy.abs().max(1.0);
                let armijo = trial.energy <= s.energy + 1e-4 * slope;
                // Near convergence the predicted decrease is below rounding in E.
                let flat = slope.abs() < noise && trial.energy <= s.energy + noise;
                if armijo || flat {
                    accepted = Some(trial);
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some(next) => {
                if t == 1.0 {
                    shift = if shift < 1e-4 { 0.0 } else { shift / 4.0 };
                } else if t < 0.25 {
                    shift = if shift == 0.0 { 0.1 } else { shift * 4.0 };
                }
                s = next;
                stalls = 0;
            }
            None => {
                stalls += 1;
                shift = if shift == 0.0 { 1.0 } else { shift * 16.0 };
                if stalls > 6 {
                    return Err(Error::NoConvergence {
                        iterations: report.iterations,
                        residual: res,
                    });
                }
            }
        }
        gr = prob.gradient(&s);
        res = prob.residual(&gr);
        report.energy_history.push(s.energy);
        report.residual_history.push(res);
    }
    report.converged = true;
    Ok(s)
}

fn run(
    alpha: f64,
    k: i32,
    grid: RadialGrid,
    s2: f64,
    start: Option<(Vec<f64>, Vec<f64>)>,
    opts: &SolveOptions,
) -> Result<(RadialProfile, SolveReport)> {
    let (mut u, mut v) = start.unwrap_or_else(|| initial_profile(&grid, k, s2, opts.init_r0));
    let n = grid.len();
    u[n - 1] = s2 / 2.0;
    v[n - 1] = -s2 / 6.0;
    let prob = Problem {
        geo: Geometry::new(&grid.r),
        k2: (k as f64) * (k as f64),
        alpha,
        opts,
    };
    prob.project(&mut u, &mut v);
    let starts: Vec<BinghamCoeffs> = u
        .iter()
        .zip(&v)
        .map(|(&u, &v)| crate::closure::initial_guess(OrderParams::new(u, v)))
        .collect();
    let s0 = prob.evaluate_from(u, v, &starts)?;
    let mut report = SolveReport::default();
    let s = minimise(&prob, s0, &mut report)?;
    let mut p = RadialProfile {
        grid,
        u: s.u,
        v: s.v,
        f: vec![],
        g: vec![],
        alpha,
        k,
        s2,
        moments: vec![],
    };
    p.set_closure(&s.inv);
    Ok((p, report))
}

/// Minimises the reduced energy without checking the profile invariants.
pub fn solve_unchecked(
    alpha: f64,
    k: i32,
    grid: RadialGrid,
    opts: &SolveOptions,
) -> Result<(RadialProfile, SolveReport)> {
    validate(alpha, k)?;
    let (s2, _) = bulk_state(alpha)?;
    run(alpha, k, grid, s2, None, opts)
}

fn enforce(p: &RadialProfile) -> Result<()> {
    let rep = check_invariants(p);
    if let Some(c) = rep.first_failure() {
        let index = c.worst_index.unwrap_or(0);
        return Err(Error::InvariantViolation {
            invariant: c.name.clone(),
            index,
            r: p.r()[index.min(p.len() - 1)],
        });
    }
    Ok(())
}

/// Minimises the reduced energy and verifies every profile invariant.
pub fn solve(
    alpha: f64,
    k: i32,
    grid: RadialGrid,
    opts: &SolveOptions,
) -> Result<(RadialProfile, SolveReport)> {
    let (p, rep) = solve_unchecked(alpha, k, grid, opts)?;
    enforce(&p)?;
    debug_assert!(residual_norm(&ode_residual(&p).0, p.r()) <= opts.tol * 10.0);
    Ok((p, rep))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Nodes on (0, core_radius].
    pub inner_nodes: usize,
    pub core_radius: f64,
    pub initial_radius: f64,
    pub max_doublings: usize,
    /// Relative change of the energy on [0, core_radius] accepted as converged.
    pub tol: f64,
    /// Do not stop before the truncation radius reaches this value.
    pub min_radius: f64,
    /// Spacing ratio of the graded zones.
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    /// Log-lattice step of the far field.
    #[serde(default = "default_log_step")]
    pub log_step: f64,
}

fn default_ratio() -> f64 {
    DEFAULT_RATIO
}

fn default_log_step() -> f64 {
    FAR_LOG_STEP
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            inner_nodes: 2000,
            core_radius: 20.0,
            initial_radius: 40.0,
            max_doublings: 10,
            tol: 1e-6,
            min_radius: 0.0,
            ratio: DEFAULT_RATIO,
            log_step: FAR_LOG_STEP,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationStep {
    pub radius: f64,
    pub nodes: usize,
    pub window_energy: f64,
    pub relative_change: Option<f64>,
}

fn resample(from: &RadialProfile, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let b = from.bulk();
    let rr = from.r();
    let lerp = |x: &[f64], far: f64, t: f64| -> f64 {
        if t >= rr[rr.len() - 1] {
            return far;
        }
        let j = rr.partition_point(|&s| s <= t);
        if j == 0 {
            return x[0] * t / rr[0];
        }
        let a = (t - rr[j - 1]) / (rr[j] - rr[j - 1]);
        x[j - 1] * (1.0 - a) + x[j] * a
    };
    (
        r.iter().map(|&t| lerp(&from.u, b.u, t)).collect(),
        r.iter().map(|&t| lerp(&from.v, b.v, t)).collect(),
    )
}

/// Solves on growing truncation radii until the energy on [0, core_radius] stabilises.
pub fn solve_infinite(
    alpha: f64,
    k: i32,
    policy: &TruncationPolicy,
    opts: &SolveOptions,
) -> Result<(RadialProfile, SolveReport, Vec<TruncationStep>)> {
    validate(alpha, k)?;
    let (s2, _) = bulk_state(alpha)?;
    let mut steps: Vec<TruncationStep> = Vec::new();
    let mut radius = policy.initial_radius;
    let mut prev: Option<RadialProfile> = None;
    for _ in 0..=policy.max_doublings {
        let grid = RadialGrid::far_field(
            policy.inner_nodes,
            policy.core_radius,
            radius,
            policy.ratio,
            policy.log_step,
        )?;
        let start = prev.as_ref().map(|p| resample(p, &grid.r));
        let (p, rep) = run(alpha, k, grid, s2, start, opts)?;
        let we = window_energy(&p, policy.core_radius);
        let change = steps
            .last()
            .map(|s| (we - s.window_energy).abs() / s.window_energy.abs().max(1e-300));
        steps.push(TruncationStep {
            radius,
            nodes: p.len(),
            window_energy: we,
            relative_change: change,
        });
        let done = matches!(change, Some(c) if c < policy.tol) && radius >= policy.min_radius;
        if done {
            enforce(&p)?;
            return Ok((p, rep, steps));
        }
        prev = Some(p);
        radius *= 2.0;
    }
    Err(Error::NoConvergence {
        iterations: steps.len(),
        residual: steps.last().and_then(|s| s.relative_change).unwrap_or(f64::NAN),
    })
}
