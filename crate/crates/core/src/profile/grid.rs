use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grading {
    GeometricNearZero,
    Uniform,
    /// Geometric near zero, uniform core, then a log lattice out to a truncation radius.
    GeometricFarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extent {
    Finite(f64),
    Truncated(f64),
}

impl Extent {
    pub fn radius(&self) -> f64 {
        match *self {
            Extent::Finite(r) | Extent::Truncated(r) => r,
        }
    }
}

/// Spacing ratio of the geometric zone and how much finer its first cell is
/// than the uniform spacing.
pub const DEFAULT_RATIO: f64 = 1.05;
const REFINEMENT: f64 = 50.0;
/// Default log-lattice step of the far field; tent breakpoints snap to multiples of it.
pub const FAR_LOG_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    /// Nodes r_1 < ... < r_N; the origin is excluded.
    pub r: Vec<f64>,
    pub grading: Grading,
    pub extent: Extent,
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn radius(&self) -> f64 {
        *self.r.last().expect("non-empty grid")
    }

    pub fn uniform(n: usize, radius: f64) -> Result<Self> {
        check(n, radius)?;
        let r = (1..=n).map(|i| radius * i as f64 / n as f64).collect();
        Ok(Self {
            r,
            grading: Grading::Uniform,
            extent: Extent::Finite(radius),
        })
    }

    /// `n` nodes on (0, radius]: spacings grow by `ratio` from h/50 up to a uniform h.
    pub fn geometric_near_zero(n: usize, radius: f64, ratio: f64) -> Result<Self> {
        check(n, radius)?;
        if !(ratio > 1.0 && ratio <= 1.1) {
            return Err(Error::InvalidInput(format!("grading ratio {ratio} not in (1, 1.1]")));
        }
        let m = ((REFINEMENT.ln() / ratio.ln()).ceil() as usize).min(n / 2);
        // r_1 = h q^-m, then m geometric spacings h q^-(m-j), then uniform h.
        let units: f64 = ratio.powi(-(m as i32))
            + (1..=m).map(|j| ratio.powi(-((m - j) as i32))).sum::<f64>()
            + (n - 1 - m) as f64;
        let h = radius / units;
        let mut r = Vec::with_capacity(n);
        let mut x = h * ratio.powi(-(m as i32));
        r.push(x);
        for j in 1..=m {
            x += h * ratio.powi(-((m - j) as i32));
            r.push(x);
        }
        while r.len() < n {
            x += h;
            r.push(x);
        }
        r[n - 1] = radius;
        Ok(Self {
            r,
            grading: Grading::GeometricNearZero,
            extent: Extent::Finite(radius),
        })
    }

    /// Graded grid with `n_inner` nodes on (0, r_inner], continued by spacings growing with
    /// `ratio` until they reach `log_step * r / 2`, then by the log lattice r = exp(j log_step)
    /// (the last node is exactly `r_eff`). Lattice nodes do not depend on `n_inner`, and
    /// halving `log_step` keeps every previous lattice node.
    pub fn far_field(n_inner: usize, r_inner: f64, r_eff: f64, ratio: f64, log_step: f64) -> Result<Self> {
        if r_eff <= r_inner {
            return Err(Error::InvalidInput(format!(
                "truncation radius {r_eff} must exceed the core radius {r_inner}"
            )));
        }
        if !(log_step > 0.0 && log_step <= 0.5) {
            return Err(Error::InvalidInput(format!("log step {log_step} not in (0, 0.5]")));
        }
        let inner = Self::geometric_near_zero(n_inner, r_inner, ratio)?;
        let mut r = inner.r;
        let mut h = r[r.len() - 1] - r[r.len() - 2];
        let mut x = r_inner;
        while h * ratio < 0.5 * log_step * x && x + h * ratio < r_eff {
            h *= ratio;
            x += h;
            r.push(x);
        }
        let mut j = ((x + 0.5 * log_step * x).ln() / log_step).ceil() as i64;
        loop {
            let l = (j as f64 * log_step).exp();
            if l >= r_eff * (-0.5 * log_step).exp() {
                break;
            }
            r.push(l);
            j += 1;
        }
        r.push(r_eff);
        Ok(Self {
            r,
            grading: Grading::GeometricFarField,
            extent: Extent::Truncated(r_eff),
        })
    }

    /// Grid on explicit nodes (e.g. read back from a file); they must increase strictly
    /// from a positive first node.
    pub fn from_nodes(r: Vec<f64>, grading: Grading, extent: Extent) -> Result<Self> {
        check(r.len(), r.last().copied().unwrap_or(0.0))?;
        if !(r[0] > 0.0) || r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "grid nodes must be positive and strictly increasing".into(),
            ));
        }
        Ok(Self { r, grading, extent })
    }

    /// Largest ratio of consecutive spacings.
    pub fn max_spacing_ratio(&self) -> f64 {
        let h: Vec<f64> = std::iter::once(self.r[0])
            .chain(self.r.windows(2).map(|w| w[1] - w[0]))
            .collect();
        h.windows(2)
            .map(|w| (w[1] / w[0]).max(w[0] / w[1]))
            .fold(1.0, f64::max)
    }

    /// Sub-grid keeping node 0, every `stride`-th node and the last node.
    pub fn coarsen_indices(&self, stride: usize) -> Vec<usize> {
        let n = self.r.len();
        let mut idx: Vec<usize> = (0..n).step_by(stride.max(1)).collect();
        if *idx.last().unwrap() != n - 1 {
            idx.push(n - 1);
        }
        idx
    }
}

fn check(n: usize, radius: f64) -> Result<()> {
    if n < 8 {
        return Err(Error::InvalidInput(format!("need at least 8 nodes, got {n}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    Ok(())
}

/// Discrete geometry shared by the energy and all quadratic forms.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub r: Vec<f64>,
    /// r_mid / h for cell (i, i+1).
    pub kappa: Vec<f64>,
    /// Lumped weights w_i = int phi_i r dr; node 0 also carries the whole core cell [0, r_1].
    pub w: Vec<f64>,
}

/// Gradient coefficient of the core cell [0, r_1] for a field vanishing at the origin like r^|k|:
/// the cell contributes `core_kappa(k2) * x_0^2`.
pub fn core_kappa(k2: f64) -> f64 {
    0.5 * k2.sqrt()
}

impl Geometry {
    pub fn new(r: &[f64]) -> Self {
        let n = r.len();
        let mut kappa = Vec::with_capacity(n - 1);
        let mut w = vec![0.0; n];
        w[0] = 0.5 * r[0] * r[0];
        for i in 0..n - 1 {
            let h = r[i + 1] - r[i];
            kappa.push(0.5 * (r[i] + r[i + 1]) / h);
            w[i] += h * (2.0 * r[i] + r[i + 1]) / 6.0;
            w[i + 1] += h * (r[i] + 2.0 * r[i + 1]) / 6.0;
        }
        Self {
            r: r.to_vec(),
            kappa,
            w,
        }
    }

    /// Weight of x_i^2 / r_i^2 in the centrifugal term for a field behaving like r^|k| near
    /// the origin; differs from `w` only at node 0.
    pub fn centrifugal_weight(&self, i: usize, k2: f64) -> f64 {
        if i == 0 && k2 > 0.0 {
            let r0 = self.r[0];
            self.w[0] - 0.5 * r0 * r0 + 0.5 * r0 * r0 / k2.sqrt()
        } else {
            self.w[i]
        }
    }
}
