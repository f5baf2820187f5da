//! Radial defect profiles: discrete reduced energy, its minimisation and post-solve checks.

mod checks;
mod discrete;
mod grid;
mod solver;

pub use checks::{
    check_invariants, ode_residual, residual_norm, third_derivative_check, InvariantCheck,
    InvariantReport, ThirdDerivativeReport,
};
pub use discrete::{energy_parts, reduced_energy, window_energy, EnergyParts};
pub use grid::{Extent, Geometry, Grading, RadialGrid, DEFAULT_RATIO, FAR_LOG_STEP, core_kappa};
pub use solver::{
    initial_profile, solve, solve_infinite, solve_unchecked, SolveOptions, SolveReport,
    TruncationPolicy, TruncationStep,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closure::{initial_guess, invert_from, ClosureJacobian, ClosureOptions, Inverted};
use crate::error::{Error, Result};
use crate::types::{BinghamCoeffs, MomentSet, OrderParams};

/// Sampled (u, v) on a radial grid with the matching closure data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub grid: RadialGrid,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub alpha: f64,
    pub k: i32,
    pub s2: f64,
    #[serde(skip)]
    pub moments: Vec<MomentSet>,
}

impl RadialProfile {
    /// Builds a profile from nodal (u, v), recomputing the closure at every node.
    /// `warm` optionally supplies starting (f, g) values.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fields(
        grid: RadialGrid,
        u: Vec<f64>,
        v: Vec<f64>,
        warm: Option<(&[f64], &[f64])>,
        alpha: f64,
        k: i32,
        s2: f64,
        opts: &ClosureOptions,
    ) -> Result<Self> {
        if u.len() != grid.len() || v.len() != grid.len() {
            return Err(Error::InvalidInput("field length does not match the grid".into()));
        }
        let starts: Vec<BinghamCoeffs> = match warm {
            Some((f, g)) => f.iter().zip(g).map(|(&f, &g)| BinghamCoeffs::new(f, g)).collect(),
            None => u
                .iter()
                .zip(&v)
                .map(|(&u, &v)| initial_guess(OrderParams::new(u, v)))
                .collect(),
        };
        let inv = invert_nodes(&u, &v, &starts, opts)?;
        let mut p = Self {
            grid,
            u,
            v,
            f: vec![],
            g: vec![],
            alpha,
            k,
            s2,
            moments: vec![],
        };
        p.set_closure(&inv);
        Ok(p)
    }

    fn set_closure(&mut self, inv: &[Inverted]) {
        self.f = inv.iter().map(|x| x.coeffs.f).collect();
        self.g = inv.iter().map(|x| x.coeffs.g).collect();
        self.moments = inv.iter().map(|x| x.moments).collect();
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn r(&self) -> &[f64] {
        &self.grid.r
    }

    pub fn k2(&self) -> f64 {
        (self.k as f64) * (self.k as f64)
    }

    pub fn jacobians(&self) -> Vec<ClosureJacobian> {
        self.moments.iter().map(ClosureJacobian::from_moments).collect()
    }

    /// Far-field values (s2/2, -s2/6).
    pub fn bulk(&self) -> OrderParams {
        OrderParams::new(self.s2 / 2.0, -self.s2 / 6.0)
    }

    /// Re-samples onto `idx` (a subset of nodes), keeping the cached closure data.
    pub fn restrict(&self, idx: &[usize]) -> Self {
        let pick = |x: &[f64]| idx.iter().map(|&i| x[i]).collect::<Vec<_>>();
        Self {
            grid: RadialGrid {
                r: pick(&self.grid.r),
                grading: self.grid.grading,
                extent: self.grid.extent,
            },
            u: pick(&self.u),
            v: pick(&self.v),
            f: pick(&self.f),
            g: pick(&self.g),
            alpha: self.alpha,
            k: self.k,
            s2: self.s2,
            moments: idx.iter().map(|&i| self.moments[i]).collect(),
        }
    }
}

/// Closure inversion at every node, in parallel; each node is independent.
pub(crate) fn invert_nodes(
    u: &[f64],
    v: &[f64],
    starts: &[BinghamCoeffs],
    opts: &ClosureOptions,
) -> Result<Vec<Inverted>> {
    (0..u.len())
        .into_par_iter()
        .map(|i| invert_from(OrderParams::new(u[i], v[i]), starts[i], opts))
        .collect()
}
