//! Second-variation quadratic forms on a solved profile.
//!
//! Test functions are piecewise linear on the profile grid and vanish at the last node.
//! At the first node only the combinations annihilated by the 1/r^2 coefficient matrix
//! are free (extended as constants over the core cell); every other combination vanishes
//! there. Pinning the regular combinations too would cut a hole of radius r_0 whose
//! capacity decays like 1/ln(1/r_0), so the spectrum would drift with refinement.
//! Gradient terms are exact per cell (weight r_mid / h), zero-order and 1/r^2 terms use
//! the lumped weights w_i = int phi_i r dr. The mass is the lumped weighted L2 product.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::profile::{Geometry, RadialProfile};

use nalgebra::{DMatrix, SymmetricEigen};

use super::eigen::BlockTridiag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum BlockLabel {
    J1d,
    IA001,
    IA02,
    IAn(u32),
    IBMode(u32),
    IBTilde,
    IA1Tilde,
}

impl fmt::Display for BlockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockLabel::J1d => write!(f, "J_1d"),
            BlockLabel::IA001 => write!(f, "I_A_001"),
            BlockLabel::IA02 => write!(f, "I_A_02"),
            BlockLabel::IAn(n) => write!(f, "I_A_n({n})"),
            BlockLabel::IBMode(m) => write!(f, "I_B_mode({m})"),
            BlockLabel::IBTilde => write!(f, "I_B_tilde"),
            BlockLabel::IA1Tilde => write!(f, "I_A1_tilde"),
        }
    }
}

/// Pointwise coefficients derived from the cached closure moments.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeCoeffs {
    pub r: f64,
    /// d / (de - c^2)
    pub d_del: f64,
    /// e / (de - c^2)
    pub e_del: f64,
    /// c / (de - c^2)
    pub c_del: f64,
    pub inv_h: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
}

impl NodeCoeffs {
    /// (a + b) / (2ab) - alpha
    pub fn ib_diag(&self) -> f64 {
        (self.a + self.b) / (2.0 * self.a * self.b) - self.alpha
    }

    /// (a - b) / (2ab)
    pub fn ib_cross(&self) -> f64 {
        (self.a - self.b) / (2.0 * self.a * self.b)
    }
}

pub(crate) fn node_coeffs(p: &RadialProfile) -> Vec<NodeCoeffs> {
    p.moments
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let del = m.delta();
            NodeCoeffs {
                r: p.r()[i],
                d_del: m.d / del,
                e_del: m.e / del,
                c_del: m.c / del,
                inv_h: 1.0 / m.h,
                a: m.a,
                b: m.b,
                alpha: p.alpha,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct QuadraticFormBlock {
    pub label: BlockLabel,
    /// Names of the test-function components, in dof order within a node.
    pub dof_map: Vec<String>,
    /// Radii of the unknown nodes (all but the last).
    pub r: Vec<f64>,
    /// Orthonormal basis (columns, row-major p x p) used for the dofs of the first node.
    pub origin_basis: Vec<f64>,
    /// Which first-node basis directions are free; the others are decoupled dummies.
    pub origin_free: Vec<bool>,
    pub stiffness: BlockTridiag,
    /// Lumped weighted-L2 mass, one entry per dof.
    pub mass: Vec<f64>,
    /// Overall constant in front of the integral.
    pub prefactor: f64,
    /// Largest |zero-order coefficient| (1/r^2 terms excluded), times the prefactor.
    pub scale: f64,
}

impl QuadraticFormBlock {
    pub fn components(&self) -> usize {
        self.stiffness.p
    }

    /// Smallest-eigenvalue tolerance: 1e-6 of the block scale.
    pub fn eps_spec(&self) -> f64 {
        1e-6 * self.scale
    }

    /// Value of the form on nodal components given over the full grid. The last value is
    /// ignored and the first is projected onto the free directions at the origin.
    pub fn value(&self, comps: &[&[f64]]) -> f64 {
        assert_eq!(comps.len(), self.components());
        let x = self.pack(comps);
        self.stiffness.quad(&x)
    }

    /// Interleaves full-grid components into the dof vector.
    pub fn pack(&self, comps: &[&[f64]]) -> Vec<f64> {
        let p = self.components();
        let n = self.stiffness.n;
        let mut x = vec![0.0; n * p];
        for i in 0..n {
            for (c, comp) in comps.iter().enumerate() {
                x[i * p + c] = comp[i];
            }
        }
        let x0: Vec<f64> = x[..p].to_vec();
        for j in 0..p {
            x[j] = if self.origin_free[j] {
                (0..p).map(|a| self.origin_basis[a * p + j] * x0[a]).sum()
            } else {
                0.0
            };
        }
        x
    }

    /// Inverse of `pack`: dof vector to nodal components (same interleaved layout).
    pub fn unpack(&self, x: &[f64]) -> Vec<f64> {
        let p = self.components();
        let mut out = x.to_vec();
        for a in 0..p {
            out[a] = (0..p).map(|j| self.origin_basis[a * p + j] * x[j]).sum();
        }
        out
    }

    pub fn mass_norm2(&self, comps: &[&[f64]]) -> f64 {
        let x = self.pack(comps);
        x.iter().zip(&self.mass).map(|(x, m)| m * x * x).sum()
    }
}

struct Spec<'a> {
    label: BlockLabel,
    names: &'a [&'a str],
    grad: &'a [f64],
    prefactor: f64,
}

/// Assembles prefactor * int { sum_c g_c (x_c')^2 + x^T (Z_reg + Z_sing) x } r dr.
/// `zero(node)` returns (Z_reg, Z_sing) as row-major p x p matrices; Z_sing must be a
/// constant matrix times 1/r^2.
fn assemble<F>(p: &RadialProfile, spec: Spec, zero: F) -> QuadraticFormBlock
where
    F: Fn(&NodeCoeffs) -> (Vec<f64>, Vec<f64>),
{
    let geo = Geometry::new(p.r());
    let coeffs = node_coeffs(p);
    let np = spec.names.len();
    let n = p.len() - 1;
    let mut k = BlockTridiag::zeros(np, n);
    let mut mass = vec![0.0; n * np];
    let mut scale: f64 = 0.0;
    let pf = spec.prefactor;
    for i in 0..n {
        let w = geo.w[i];
        let (reg, sing) = zero(&coeffs[i]);
        let left = if i == 0 { 0.0 } else { geo.kappa[i - 1] };
        for a in 0..np {
            *k.d_mut(i, a, a) += pf * spec.grad[a] * (left + geo.kappa[i]);
            for b in 0..np {
                *k.d_mut(i, a, b) += pf * w * (reg[a * np + b] + sing[a * np + b]);
                scale = scale.max(pf * reg[a * np + b].abs());
            }
            mass[i * np + a] = w;
            if i + 1 < n {
                *k.o_mut(i, a, a) = -pf * spec.grad[a] * geo.kappa[i];
            }
        }
    }

    // First node: rotate to the eigenbasis of the 1/r^2 matrix, keep its null directions.
    let r0 = p.r()[0];
    let s0 = DMatrix::from_row_slice(np, np, &zero(&coeffs[0]).1) * (r0 * r0);
    let eig = SymmetricEigen::new(s0);
    let top = eig.eigenvalues.amax().max(1.0);
    let free: Vec<bool> = eig.eigenvalues.iter().map(|l| l.abs() <= 1e-12 * top).collect();
    let q = eig.eigenvectors;
    let mut basis = vec![0.0; np * np];
    for a in 0..np {
        for j in 0..np {
            basis[a * np + j] = q[(a, j)];
        }
    }
    let d0 = DMatrix::from_fn(np, np, |a, b| k.d(0, a, b));
    let o0 = DMatrix::from_fn(np, np, |a, b| k.o(0, a, b));
    let d0 = q.transpose() * d0 * &q;
    let o0 = q.transpose() * o0;
    for a in 0..np {
        for b in 0..np {
            let keep = free[a] && free[b];
            *k.d_mut(0, a, b) = if keep { d0[(a, b)] } else { 0.0 };
            if n > 1 {
                *k.o_mut(0, a, b) = if free[a] { o0[(a, b)] } else { 0.0 };
            }
        }
    }
    // Pinned directions become decoupled dummies placed above the rest of the spectrum.
    if free.iter().any(|f| !f) {
        let s: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let (_, hi) = k.scaled(&s).gershgorin();
        let dummy = 2.0 * hi.abs().max(1.0) * mass[0];
        for (a, f) in free.iter().enumerate() {
            if !f {
                *k.d_mut(0, a, a) = dummy;
            }
        }
    }

    QuadraticFormBlock {
        label: spec.label,
        dof_map: spec.names.iter().map(|s| s.to_string()).collect(),
        r: p.r()[..n].to_vec(),
        origin_basis: basis,
        origin_free: free,
        stiffness: k,
        mass,
        prefactor: pf,
        scale,
    }
}

fn kabs(p: &RadialProfile) -> f64 {
    p.k.unsigned_abs() as f64
}

/// Second variation of the reduced energy in (mu, nu) = (delta u, delta v).
pub fn assemble_j(p: &RadialProfile) -> QuadraticFormBlock {
    let k2 = p.k2();
    let s3 = 3f64.sqrt();
    assemble(
        p,
        Spec {
            label: BlockLabel::J1d,
            names: &["mu", "nu"],
            grad: &[1.0, 3.0],
            prefactor: 2.0,
        },
        |c| {
            let x = -s3 * c.c_del;
            (
                vec![c.d_del - c.alpha, x, x, 3.0 * (c.e_del - c.alpha)],
                vec![k2 / (c.r * c.r), 0.0, 0.0, 0.0],
            )
        },
    )
}

/// I^A restricted to the n = 0 modes of (w_0, w_1).
pub fn assemble_ia_001(p: &RadialProfile) -> QuadraticFormBlock {
    let k2 = p.k2();
    assemble(
        p,
        Spec {
            label: BlockLabel::IA001,
            names: &["mu0_0", "mu0_1"],
            grad: &[1.0, 1.0],
            prefactor: 2.0 * PI,
        },
        |c| {
            (
                vec![c.e_del - c.alpha, -c.c_del, -c.c_del, c.d_del - c.alpha],
                vec![0.0, 0.0, 0.0, k2 / (c.r * c.r)],
            )
        },
    )
}

/// I^A restricted to the n = 0 mode of w_2.
pub fn assemble_ia_02(p: &RadialProfile) -> QuadraticFormBlock {
    let k2 = p.k2();
    assemble(
        p,
        Spec {
            label: BlockLabel::IA02,
            names: &["mu0_2"],
            grad: &[1.0],
            prefactor: 2.0 * PI,
        },
        |c| (vec![c.inv_h - c.alpha], vec![k2 / (c.r * c.r)]),
    )
}

/// I^A on the cos(n phi), sin(n phi) modes of (w_0, w_1, w_2), n >= 1.
pub fn assemble_ia_n(p: &RadialProfile, n: u32) -> QuadraticFormBlock {
    let k = kabs(p);
    let nf = n as f64;
    assemble(
        p,
        Spec {
            label: BlockLabel::IAn(n),
            names: &["mu_0", "nu_0", "mu_1", "nu_1", "mu_2", "nu_2"],
            grad: &[1.0; 6],
            prefactor: PI,
        },
        |c| {
            let mut reg = vec![0.0; 36];
            let mut sing = vec![0.0; 36];
            let diag = [c.e_del, c.e_del, c.d_del, c.d_del, c.inv_h, c.inv_h];
            for (i, d) in diag.iter().enumerate() {
                reg[i * 6 + i] = d - c.alpha;
            }
            // -2c/(de-c^2) (mu_0 mu_1 + nu_0 nu_1)
            for (a, b) in [(0, 2), (1, 3)] {
                reg[a * 6 + b] = -c.c_del;
                reg[b * 6 + a] = -c.c_del;
            }
            let ir2 = 1.0 / (c.r * c.r);
            for i in 0..6 {
                sing[i * 6 + i] = nf * nf * ir2 + if i >= 2 { k * k * ir2 } else { 0.0 };
            }
            // 4nk/r^2 (mu_1 nu_2 - mu_2 nu_1)
            let t = 2.0 * nf * k * ir2;
            for (a, b, s) in [(2, 5, t), (4, 3, -t)] {
                sing[a * 6 + b] = s;
                sing[b * 6 + a] = s;
            }
            (reg, sing)
        },
    )
}

/// Azimuthal pair (m, |k| - m) of the complex field z = w_3 + i w_4 with m >= |k|/2.
pub fn ib_partner(p: &RadialProfile, m: u32) -> i64 {
    p.k.unsigned_abs() as i64 - m as i64
}

/// Smallest admissible mode index for I^B (pairs are counted once).
pub fn ib_first_mode(p: &RadialProfile) -> u32 {
    p.k.unsigned_abs().div_ceil(2)
}

/// One coupled pair of azimuthal modes of I^B (without the 2 pi in front of the sum).
pub fn assemble_ib_mode(p: &RadialProfile, m: u32) -> QuadraticFormBlock {
    let l = ib_partner(p, m);
    let mf = m as f64;
    let lf = l as f64;
    if l == m as i64 {
        return assemble(
            p,
            Spec {
                label: BlockLabel::IBMode(m),
                names: &["re_m", "im_m"],
                grad: &[1.0, 1.0],
                prefactor: 1.0,
            },
            |c| {
                let (a, x) = (c.ib_diag(), c.ib_cross());
                let s = mf * mf / (c.r * c.r);
                (vec![a - x, 0.0, 0.0, a + x], vec![s, 0.0, 0.0, s])
            },
        );
    }
    assemble(
        p,
        Spec {
            label: BlockLabel::IBMode(m),
            names: &["re_m", "re_l", "im_m", "im_l"],
            grad: &[1.0; 4],
            prefactor: 1.0,
        },
        |c| {
            let (a, x) = (c.ib_diag(), c.ib_cross());
            // -(a-b)/(ab) Re(z_m z_l) = -2x (re_m re_l - im_m im_l)
            let mut reg = vec![0.0; 16];
            for i in 0..4 {
                reg[i * 4 + i] = a;
            }
            reg[1] = -x;
            reg[4] = -x;
            reg[2 * 4 + 3] = x;
            reg[3 * 4 + 2] = x;
            let ir2 = 1.0 / (c.r * c.r);
            let (sm, sl) = (mf * mf * ir2, lf * lf * ir2);
            let mut sing = vec![0.0; 16];
            sing[0] = sm;
            sing[5] = sl;
            sing[10] = sm;
            sing[15] = sl;
            (reg, sing)
        },
    )
}

/// The reduced real form Itilde(q0, q1).
pub fn assemble_ib_tilde(p: &RadialProfile) -> QuadraticFormBlock {
    assemble(
        p,
        Spec {
            label: BlockLabel::IBTilde,
            names: &["q0", "q1"],
            grad: &[1.0, 1.0],
            prefactor: 1.0,
        },
        |c| {
            let (a, x) = (c.ib_diag(), c.ib_cross());
            (
                vec![a, -x, -x, a],
                vec![0.0, 0.0, 0.0, 1.0 / (c.r * c.r)],
            )
        },
    )
}

/// The reduced triple form Itilde_1^A(alpha_0, alpha_1, alpha_2).
pub fn assemble_ia1_tilde(p: &RadialProfile) -> QuadraticFormBlock {
    let k = kabs(p);
    assemble(
        p,
        Spec {
            label: BlockLabel::IA1Tilde,
            names: &["alpha_0", "alpha_1", "alpha_2"],
            grad: &[1.0; 3],
            prefactor: 1.0,
        },
        |c| {
            let mut reg = vec![0.0; 9];
            reg[0] = c.e_del - c.alpha;
            reg[4] = c.d_del - c.alpha;
            reg[8] = c.inv_h - c.alpha;
            reg[1] = -c.c_del;
            reg[3] = -c.c_del;
            let ir2 = 1.0 / (c.r * c.r);
            let mut sing = vec![0.0; 9];
            sing[0] = ir2;
            sing[4] = (1.0 + k * k) * ir2;
            sing[8] = (1.0 + k * k) * ir2;
            sing[5] = -2.0 * k * ir2;
            sing[7] = -2.0 * k * ir2;
            (reg, sing)
        },
    )
}

pub fn assemble_block(p: &RadialProfile, label: BlockLabel) -> QuadraticFormBlock {
    match label {
        BlockLabel::J1d => assemble_j(p),
        BlockLabel::IA001 => assemble_ia_001(p),
        BlockLabel::IA02 => assemble_ia_02(p),
        BlockLabel::IAn(n) => assemble_ia_n(p, n),
        BlockLabel::IBMode(m) => assemble_ib_mode(p, m),
        BlockLabel::IBTilde => assemble_ib_tilde(p),
        BlockLabel::IA1Tilde => assemble_ia1_tilde(p),
    }
}

/// I^B = 2 pi int sum_m [|z_m'|^2 + m^2/r^2 |z_m|^2 + A |z_m|^2] - K sum_{m+l=|k|} Re(z_m z_l),
/// evaluated directly from a finite set of azimuthal modes (m, Re z_m, Im z_m) given on
/// the full grid. Independent of the block assembly.
pub fn ib_direct(p: &RadialProfile, modes: &[(i64, Vec<f64>, Vec<f64>)]) -> f64 {
    let geo = Geometry::new(p.r());
    let coeffs = node_coeffs(p);
    let kk = p.k.unsigned_abs() as i64;
    let n = p.len();
    let mut total = 0.0;
    for (m, re, im) in modes {
        for i in 0..n - 1 {
            let (dr, di) = (re[i + 1] - re[i], im[i + 1] - im[i]);
            total += geo.kappa[i] * (dr * dr + di * di);
        }
        for i in 0..n - 1 {
            let c = &coeffs[i];
            let z2 = re[i] * re[i] + im[i] * im[i];
            total += geo.w[i] * ((*m as f64).powi(2) / (c.r * c.r) + c.ib_diag()) * z2;
        }
    }
    for (m, re, im) in modes {
        for (l, re2, im2) in modes {
            if m + l != kk {
                continue;
            }
            for i in 0..n - 1 {
                let c = &coeffs[i];
                total -= geo.w[i] * c.ib_cross() * (re[i] * re2[i] - im[i] * im2[i]);
            }
        }
    }
    2.0 * PI * total
}
