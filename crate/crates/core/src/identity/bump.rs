//! Compactly supported C^2 test functions: sums of uniform cubic B-splines.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub lo: f64,
    pub hi: f64,
    /// Coefficients of the B-splines starting at lo, lo + h, ...; h = (hi - lo) / (len + 3).
    pub coeffs: Vec<f64>,
}

/// Uniform cubic B-spline on [0, 4] with derivatives up to second order.
fn b3(t: f64) -> [f64; 3] {
    if !(0.0..4.0).contains(&t) {
        return [0.0; 3];
    }
    let (j, s) = (t.floor(), t - t.floor());
    match j as i32 {
        0 => [s * s * s / 6.0, s * s / 2.0, s],
        1 => [
            (-3.0 * s * s * s + 3.0 * s * s + 3.0 * s + 1.0) / 6.0,
            (-9.0 * s * s + 6.0 * s + 3.0) / 6.0,
            -3.0 * s + 1.0,
        ],
        2 => [
            (3.0 * s * s * s - 6.0 * s * s + 4.0) / 6.0,
            (9.0 * s * s - 12.0 * s) / 6.0,
            3.0 * s - 2.0,
        ],
        _ => {
            let q = 1.0 - s;
            [q * q * q / 6.0, -q * q / 2.0, q]
        }
    }
}

impl Bump {
    pub fn new(lo: f64, hi: f64, coeffs: Vec<f64>) -> Self {
        assert!(hi > lo && !coeffs.is_empty());
        Self { lo, hi, coeffs }
    }

    /// 3-8 coefficients in [-1, 1] on a random sub-interval of [lo, hi] covering at least `min_frac` of it.
    pub fn random<R: Rng>(rng: &mut R, lo: f64, hi: f64, min_frac: f64) -> Self {
        let len = hi - lo;
        let width = len * rng.gen_range(min_frac..=1.0);
        let start = lo + rng.gen_range(0.0..=(len - width));
        let n = rng.gen_range(3..=8);
        let coeffs = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Self::new(start, start + width, coeffs)
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.coeffs.len() + 3) as f64
    }

    /// Interior knots, where the bump is only C^2.
    pub fn knots(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..=self.coeffs.len() + 3).map(|j| self.lo + j as f64 * h).collect()
    }

    /// (value, first, second derivative).
    pub fn eval(&self, r: f64) -> [f64; 3] {
        let h = self.spacing();
        let mut out = [0.0; 3];
        for (j, c) in self.coeffs.iter().enumerate() {
            let b = b3((r - self.lo) / h - j as f64);
            out[0] += c * b[0];
            out[1] += c * b[1] / h;
            out[2] += c * b[2] / (h * h);
        }
        out
    }

    pub fn zero(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, vec![0.0; 3])
    }
}
