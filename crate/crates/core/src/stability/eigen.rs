//! Smallest eigenpairs of a symmetric block-tridiagonal pencil (K, diag(m)).
//!
//! Eigenvalues by bisection on the Sylvester inertia of the block LDL^T
//! factorisation of D^-1/2 K D^-1/2 - sigma, eigenvectors by inverse iteration.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Symmetric block-tridiagonal matrix with `n` diagonal blocks of size `p`
/// (row-major). `off[i]` holds the block in block-row i, block-column i + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiag {
    pub p: usize,
    pub n: usize,
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl BlockTridiag {
    pub fn zeros(p: usize, n: usize) -> Self {
        Self {
            p,
            n,
            diag: vec![0.0; n * p * p],
            off: vec![0.0; n.saturating_sub(1) * p * p],
        }
    }

    pub fn dim(&self) -> usize {
        self.n * self.p
    }

    #[inline]
    pub fn d(&self, i: usize, a: usize, b: usize) -> f64 {
        self.diag[(i * self.p + a) * self.p + b]
    }

    #[inline]
    pub fn d_mut(&mut self, i: usize, a: usize, b: usize) -> &mut f64 {
        &mut self.diag[(i * self.p + a) * self.p + b]
    }

    #[inline]
    pub fn o(&self, i: usize, a: usize, b: usize) -> f64 {
        self.off[(i * self.p + a) * self.p + b]
    }

    #[inline]
    pub fn o_mut(&mut self, i: usize, a: usize, b: usize) -> &mut f64 {
        &mut self.off[(i * self.p + a) * self.p + b]
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let p = self.p;
        let mut y = vec![0.0; self.dim()];
        for i in 0..self.n {
            for a in 0..p {
                let mut s = 0.0;
                for b in 0..p {
                    s += self.d(i, a, b) * x[i * p + b];
                    if i + 1 < self.n {
                        s += self.o(i, a, b) * x[(i + 1) * p + b];
                    }
                    if i > 0 {
                        s += self.o(i - 1, b, a) * x[(i - 1) * p + b];
                    }
                }
                y[i * p + a] = s;
            }
        }
        y
    }

    /// x^T A x.
    pub fn quad(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Largest |A_ab - A_ba| over the diagonal blocks.
    pub fn symmetry_defect(&self) -> f64 {
        let p = self.p;
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for a in 0..p {
                for b in 0..a {
                    worst = worst.max((self.d(i, a, b) - self.d(i, b, a)).abs());
                }
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let p = self.p;
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for i in 0..self.n {
            for a in 0..p {
                for b in 0..p {
                    m[(i * p + a, i * p + b)] = self.d(i, a, b);
                    if i + 1 < self.n {
                        m[(i * p + a, (i + 1) * p + b)] = self.o(i, a, b);
                        m[((i + 1) * p + b, i * p + a)] = self.o(i, a, b);
                    }
                }
            }
        }
        m
    }

    /// S K S with S = diag(s).
    pub fn scaled(&self, s: &[f64]) -> Self {
        let p = self.p;
        let mut out = self.clone();
        for i in 0..self.n {
            for a in 0..p {
                for b in 0..p {
                    *out.d_mut(i, a, b) *= s[i * p + a] * s[i * p + b];
                    if i + 1 < self.n {
                        *out.o_mut(i, a, b) *= s[i * p + a] * s[(i + 1) * p + b];
                    }
                }
            }
        }
        out
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let p = self.p;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            for a in 0..p {
                let mut rad = 0.0;
                for b in 0..p {
                    if b != a {
                        rad += self.d(i, a, b).abs();
                    }
                    if i + 1 < self.n {
                        rad += self.o(i, a, b).abs();
                    }
                    if i > 0 {
                        rad += self.o(i - 1, b, a).abs();
                    }
                }
                let c = self.d(i, a, a);
                lo = lo.min(c - rad);
                hi = hi.max(c + rad);
            }
        }
        (lo, hi)
    }
}

/// In-place LDL^T of a small symmetric p x p matrix (lower triangle used).
/// Returns the number of negative pivots; zero pivots are nudged off zero.
fn ldl_small(a: &mut [f64], p: usize, tiny: f64) -> usize {
    let mut neg = 0;
    for j in 0..p {
        let mut dj = a[j * p + j];
        for k in 0..j {
            dj -= a[j * p + k] * a[j * p + k] * a[k * p + k];
        }
        if dj.abs() < tiny {
            dj = if dj < 0.0 { -tiny } else { tiny };
        }
        a[j * p + j] = dj;
        if dj < 0.0 {
            neg += 1;
        }
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= a[i * p + k] * a[j * p + k] * a[k * p + k];
            }
            a[i * p + j] = s / dj;
        }
    }
    neg
}

/// Solves (L D L^T) x = b in place for a factor from `ldl_small`.
fn ldl_small_solve(f: &[f64], p: usize, b: &mut [f64]) {
    for i in 0..p {
        for k in 0..i {
            b[i] -= f[i * p + k] * b[k];
        }
    }
    for i in 0..p {
        b[i] /= f[i * p + i];
    }
    for i in (0..p).rev() {
        for k in i + 1..p {
            b[i] -= f[k * p + i] * b[k];
        }
    }
}

/// Block LDL^T of A - sigma I: pivot factors and D_i^{-1} B_i.
struct Factor {
    piv: Vec<f64>,
    dinv_b: Vec<f64>,
    negatives: usize,
}

fn factor(a: &BlockTridiag, sigma: f64, tiny: f64) -> Factor {
    let p = a.p;
    let pp = p * p;
    let mut piv = vec![0.0; a.n * pp];
    let mut dinv_b = vec![0.0; a.n.saturating_sub(1) * pp];
    let mut negatives = 0;
    let mut col = vec![0.0; p];
    for i in 0..a.n {
        let blk = &mut piv[i * pp..(i + 1) * pp];
        blk.copy_from_slice(&a.diag[i * pp..(i + 1) * pp]);
        for d in 0..p {
            blk[d * p + d] -= sigma;
        }
        if i > 0 {
            // D_i = A_ii - sigma - B^T (D^{-1} B)
            let w = &dinv_b[(i - 1) * pp..i * pp];
            let b = &a.off[(i - 1) * pp..i * pp];
            for r in 0..p {
                for c in 0..=r {
                    let mut s = 0.0;
                    for k in 0..p {
                        s += b[k * p + r] * w[k * p + c];
                    }
                    blk[r * p + c] -= s;
                }
            }
        }
        negatives += ldl_small(blk, p, tiny);
        if i + 1 < a.n {
            let b = &a.off[i * pp..(i + 1) * pp];
            let f = &piv[i * pp..(i + 1) * pp];
            let out = &mut dinv_b[i * pp..(i + 1) * pp];
            for c in 0..p {
                for r in 0..p {
                    col[r] = b[r * p + c];
                }
                ldl_small_solve(f, p, &mut col);
                for r in 0..p {
                    out[r * p + c] = col[r];
                }
            }
        }
    }
    Factor {
        piv,
        dinv_b,
        negatives,
    }
}

fn solve_factored(a: &BlockTridiag, f: &Factor, rhs: &[f64]) -> Vec<f64> {
    let p = a.p;
    let pp = p * p;
    let mut z = rhs.to_vec();
    // forward: z_{i+1} -= B_i^T D_i^{-1} z_i = (D_i^{-1} B_i)^T z_i
    for i in 0..a.n.saturating_sub(1) {
        let w = &f.dinv_b[i * pp..(i + 1) * pp];
        for c in 0..p {
            let mut s = 0.0;
            for r in 0..p {
                s += w[r * p + c] * z[i * p + r];
            }
            z[(i + 1) * p + c] -= s;
        }
    }
    let mut x = vec![0.0; a.dim()];
    for i in (0..a.n).rev() {
        let mut b: Vec<f64> = z[i * p..(i + 1) * p].to_vec();
        if i + 1 < a.n {
            let off = &a.off[i * pp..(i + 1) * pp];
            for r in 0..p {
                for c in 0..p {
                    b[r] -= off[r * p + c] * x[(i + 1) * p + c];
                }
            }
        }
        ldl_small_solve(&f.piv[i * pp..(i + 1) * pp], p, &mut b);
        x[i * p..(i + 1) * p].copy_from_slice(&b);
    }
    x
}

/// Number of eigenvalues of `a` below `sigma`.
pub fn count_below(a: &BlockTridiag, sigma: f64) -> usize {
    let (lo, hi) = a.gershgorin();
    let tiny = 1e-300_f64.max(f64::EPSILON * 1e-3 * lo.abs().max(hi.abs()));
    factor(a, sigma, tiny).negatives
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    /// Eigenvector of the pencil (K - lambda M) x = 0, normalised so x^T M x = 1.
    #[serde(skip)]
    pub vector: Vec<f64>,
    /// ||K x - lambda M x|| / ||M x|| scaled by the spectral radius bound.
    pub residual: f64,
}

/// The `count` smallest eigenvalues of the pencil (K, diag(mass)).
pub fn smallest(k: &BlockTridiag, mass: &[f64], count: usize) -> Vec<Eigenpair> {
    let s: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let a = k.scaled(&s);
    let count = count.min(a.dim());
    let (glo, ghi) = a.gershgorin();
    let scale = glo.abs().max(ghi.abs()).max(1e-300);
    let tiny = f64::EPSILON * 1e-3 * scale;
    let mut out = Vec::with_capacity(count);
    let mut lo_start = glo;
    for j in 0..count {
        let (mut lo, mut hi) = (lo_start, ghi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1e-8 * scale) {
                break;
            }
            if factor(&a, mid, tiny).negatives > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let value = 0.5 * (lo + hi);
        lo_start = lo;
        let y = inverse_iteration(&a, value, scale, j, &out, &s);
        let ay = a.matvec(&y);
        let res = ay
            .iter()
            .zip(&y)
            .map(|(p, q)| (p - value * q).powi(2))
            .sum::<f64>()
            .sqrt()
            / scale;
        let vector: Vec<f64> = y.iter().zip(&s).map(|(y, s)| y * s).collect();
        out.push(Eigenpair {
            value,
            vector,
            residual: res,
        });
    }
    out
}

fn inverse_iteration(
    a: &BlockTridiag,
    value: f64,
    scale: f64,
    seed: usize,
    previous: &[Eigenpair],
    s: &[f64],
) -> Vec<f64> {
    let n = a.dim();
    let shift = value - 1e-10 * scale.max(value.abs()).min(1e-6 * scale.max(1.0));
    let tiny = f64::EPSILON * 1e-3 * scale;
    let f = factor(a, shift, tiny);
    // previous eigenvectors in the scaled coordinates, for deflation of near-degenerate pairs
    let prev: Vec<Vec<f64>> = previous
        .iter()
        .map(|e| e.vector.iter().zip(s).map(|(x, s)| x / s).collect())
        .collect();
    let mut y: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i * 7919 + seed * 104729) % 997) as f64 / 997.0)
        .collect();
    for _ in 0..6 {
        for q in &prev {
            let d: f64 = q.iter().zip(&y).map(|(a, b)| a * b).sum();
            for (yi, qi) in y.iter_mut().zip(q) {
                *yi -= d * qi;
            }
        }
        let nrm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut y {
            *x /= nrm;
        }
        y = solve_factored(a, &f, &y);
    }
    for q in &prev {
        let d: f64 = q.iter().zip(&y).map(|(a, b)| a * b).sum();
        for (yi, qi) in y.iter_mut().zip(q) {
            *yi -= d * qi;
        }
    }
    let nrm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
    y.iter().map(|x| x / nrm).collect()
}

/// All eigenvalues of the pencil by a dense symmetric solve, ascending.
pub fn dense_eigenvalues(k: &BlockTridiag, mass: &[f64]) -> Vec<f64> {
    let s: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let a = k.scaled(&s).to_dense();
    let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
