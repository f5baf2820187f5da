//! Inversion of the moment map (f, g) -> (u, v) and the Jacobians of both maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::moments;
use crate::types::{BinghamCoeffs, MomentSet, OrderParams, QuadratureSpec};

/// Derivatives of (f, g) with respect to (u, v).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureJacobian {
    pub f_u: f64,
    pub f_v: f64,
    pub g_u: f64,
    pub g_v: f64,
}

impl ClosureJacobian {
    pub fn from_moments(m: &MomentSet) -> Self {
        let dl = m.delta();
        let s3 = 3f64.sqrt();
        Self {
            f_u: m.d / dl,
            f_v: -s3 * m.c / dl,
            g_u: -m.c / (s3 * dl),
            g_v: m.e / dl,
        }
    }

    pub fn as_matrix(&self) -> [[f64; 2]; 2] {
        [[self.f_u, self.f_v], [self.g_u, self.g_v]]
    }
}

/// Derivatives of (u, v) with respect to (f, g): [[e, sqrt3 c], [c / sqrt3, d]].
pub fn forward_jacobian(m: &MomentSet) -> [[f64; 2]; 2] {
    let s3 = 3f64.sqrt();
    [[m.e, s3 * m.c], [m.c / s3, m.d]]
}

pub fn jacobian(b: BinghamCoeffs, q: &QuadratureSpec) -> Result<ClosureJacobian> {
    Ok(ClosureJacobian::from_moments(&moments(b, q)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Required distance of every eigenvalue from the physical bounds.
    pub margin: f64,
    pub quad: QuadratureSpec,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 60,
            margin: 1e-9,
            quad: QuadratureSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceStep {
    pub f: f64,
    pub g: f64,
    pub residual: f64,
    /// Step length actually taken to reach this iterate (1 = full Newton step).
    pub step: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveTrace {
    pub target: OrderParams,
    pub steps: Vec<TraceStep>,
    pub converged: bool,
}

impl SolveTrace {
    pub fn iterations(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Inverted {
    pub coeffs: BinghamCoeffs,
    pub moments: MomentSet,
    pub iterations: usize,
    pub residual: f64,
}

fn residual_of(m: &MomentSet, t: OrderParams) -> (f64, f64, f64) {
    let ru = m.u - t.u;
    let rv = m.v - t.v;
    (ru, rv, ru.abs().max(rv.abs()))
}

/// Initial guess from the linearisation at the origin, (f, g) = (15/2)(u, v).
pub fn initial_guess(t: OrderParams) -> BinghamCoeffs {
    BinghamCoeffs::new(7.5 * t.u, 7.5 * t.v)
}

fn newton(
    target: OrderParams,
    start: BinghamCoeffs,
    opts: &ClosureOptions,
    mut log: Option<&mut Vec<TraceStep>>,
) -> Result<Inverted> {
    target.check(opts.margin)?;
    let cap = opts.quad.cap;
    let clip = |x: f64| x.clamp(-cap, cap);
    let mut b = BinghamCoeffs::new(clip(start.f), clip(start.g));
    let mut m = moments(b, &opts.quad)?;
    let (mut ru, mut rv, mut res) = residual_of(&m, target);
    if let Some(l) = log.as_deref_mut() {
        l.push(TraceStep {
            f: b.f,
            g: b.g,
            residual: res,
            step: 0.0,
        });
    }
    let mut it = 0;
    while res > opts.tol {
        if it >= opts.max_iter {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
        it += 1;
        let j = ClosureJacobian::from_moments(&m);
        let df = -(j.f_u * ru + j.f_v * rv);
        let dg = -(j.g_u * ru + j.g_v * rv);
        let mut t = 1.0;
        let mut accepted = None;
        let mut fallback = None;
        for _ in 0..=8 {
            let trial = BinghamCoeffs::new(b.f + t * df, b.g + t * dg);
            if trial.check(cap).is_ok() {
                if let Ok(mt) = moments(trial, &opts.quad) {
                    let (tu, tv, tr) = residual_of(&mt, target);
                    if tr < res {
                        accepted = Some((trial, mt, tu, tv, tr, t));
                        break;
                    }
                    fallback = Some((trial, mt, tu, tv, tr, t));
                }
            }
            t *= 0.5;
        }
        let step = match accepted.or(fallback) {
            Some(s) => s,
            None => {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: res,
                })
            }
        };
        // A non-decreasing step means we are at the rounding floor.
        let stalled = step.4 >= res;
        b = step.0;
        m = step.1;
        ru = step.2;
        rv = step.3;
        res = step.4;
        if let Some(l) = log.as_deref_mut() {
            l.push(TraceStep {
                f: b.f,
                g: b.g,
                residual: res,
                step: step.5,
            });
        }
        if stalled && res > opts.tol {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
    }
    Ok(Inverted {
        coeffs: b,
        moments: m,
        iterations: it,
        residual: res,
    })
}

/// Finds the unique (f, g) whose moments reproduce `target`.
pub fn invert(target: OrderParams, opts: &ClosureOptions) -> Result<BinghamCoeffs> {
    Ok(newton(target, initial_guess(target), opts, None)?.coeffs)
}

/// Same as [`invert`] but from a caller-supplied start; returns the matched moments too.
pub fn invert_from(
    target: OrderParams,
    start: BinghamCoeffs,
    opts: &ClosureOptions,
) -> Result<Inverted> {
    newton(target, start, opts, None)
}

pub fn invert_full(target: OrderParams, opts: &ClosureOptions) -> Result<Inverted> {
    newton(target, initial_guess(target), opts, None)
}

/// Newton iteration log from the origin-linearised start.
pub fn solve_trace(target: OrderParams, opts: &ClosureOptions) -> Result<SolveTrace> {
    let mut steps = Vec::new();
    let out = newton(target, initial_guess(target), opts, Some(&mut steps));
    match out {
        Ok(_) => Ok(SolveTrace {
            target,
            steps,
            converged: true,
        }),
        Err(Error::NoConvergence { .. }) => Ok(SolveTrace {
            target,
            steps,
            converged: false,
        }),
        Err(e) => Err(e),
    }
}
