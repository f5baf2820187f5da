use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on |f|, |g|.
pub const F_MAX: f64 = 200.0;

/// Coefficients of B_Q = f F1 + g F2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct BinghamCoeffs {
    pub f: f64,
    pub g: f64,
}

impl BinghamCoeffs {
    pub fn new(f: f64, g: f64) -> Self {
        Self { f, g }
    }

    pub fn check(&self, cap: f64) -> Result<()> {
        if !self.f.is_finite() || !self.g.is_finite() || self.f.abs() > cap || self.g.abs() > cap {
            return Err(Error::CapExceeded {
                f: self.f,
                g: self.g,
                cap,
            });
        }
        Ok(())
    }
}

/// Coefficients of Q = u F1 + v F2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct OrderParams {
    pub u: f64,
    pub v: f64,
}

impl OrderParams {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    /// Eigenvalues of u F1 + v F2: (u - v, -u - v, 2v).
    pub fn eigenvalues(&self) -> [f64; 3] {
        [self.u - self.v, -self.u - self.v, 2.0 * self.v]
    }

    /// True when every eigenvalue lies in (-1/3 + margin, 2/3 - margin).
    pub fn is_physical(&self, margin: f64) -> bool {
        self.u.is_finite()
            && self.v.is_finite()
            && self
                .eigenvalues()
                .iter()
                .all(|&l| l > -1.0 / 3.0 + margin && l < 2.0 / 3.0 - margin)
    }

    pub fn check(&self, margin: f64) -> Result<()> {
        if self.is_physical(margin) {
            Ok(())
        } else {
            Err(Error::OutOfPhysicalRegion {
                u: self.u,
                v: self.v,
            })
        }
    }

    /// Nearest point satisfying v <= v_max and the eigenvalue bounds with `margin`.
    pub fn clamp_physical(&self, margin: f64, v_max: f64) -> Self {
        let v = self
            .v
            .min(v_max)
            .min(1.0 / 3.0 - margin / 2.0)
            .max(-1.0 / 6.0 + margin / 2.0 + 1e-15);
        // u - v < 2/3 - m, -u - v < 2/3 - m, u - v > -1/3 + m, -u - v > -1/3 + m
        let hi = (2.0 / 3.0 - margin + v).min(1.0 / 3.0 - margin - v);
        let lo = (-2.0 / 3.0 + margin - v).max(-1.0 / 3.0 + margin + v);
        let u = self.u.clamp(lo, hi);
        Self { u, v }
    }
}

/// Partition value and the eight moments of the density at one (f, g).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub z: f64,
    /// ln Z, kept separately so it stays finite when Z overflows.
    pub ln_z: f64,
    pub u: f64,
    pub v: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub h: f64,
}

impl MomentSet {
    /// de - c^2.
    pub fn delta(&self) -> f64 {
        self.d * self.e - self.c * self.c
    }

    pub fn order_params(&self) -> OrderParams {
        OrderParams::new(self.u, self.v)
    }

    /// Field values in a fixed order, for comparisons.
    pub fn fields(&self) -> [(&'static str, f64); 9] {
        [
            ("z", self.z),
            ("u", self.u),
            ("v", self.v),
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("d", self.d),
            ("e", self.e),
            ("h", self.h),
        ]
    }
}

/// Quadrature scheme for sphere integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ProductGauss2d,
    ThetaReduction1d,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub order: usize,
    /// Cap on |f|, |g|.
    pub cap: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::ProductGauss2d,
            order: 64,
            cap: F_MAX,
        }
    }
}

impl QuadratureSpec {
    pub fn product(order: usize) -> Self {
        Self {
            scheme: Scheme::ProductGauss2d,
            order,
            cap: F_MAX,
        }
    }

    pub fn theta_reduced(order: usize) -> Self {
        Self {
            scheme: Scheme::ThetaReduction1d,
            order,
            cap: F_MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidInput(format!(
                "quadrature order {} too small",
                self.order
            )));
        }
        Ok(())
    }
}
