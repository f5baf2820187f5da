//! The moment operator L_Q in the basis {E_0, ..., E_4} at the phi = 0 frame.

use crate::closure::{invert_full, ClosureOptions};
use crate::error::Result;
use crate::types::{MomentSet, OrderParams};

pub type Matrix5 = [[f64; 5]; 5];

/// L_Q(E_i) : E_j for the moments of a Bingham density.
pub fn lq_from_moments(m: &MomentSet) -> Matrix5 {
    let mut out = [[0.0; 5]; 5];
    out[0][0] = m.d;
    out[0][1] = m.c;
    out[1][0] = m.c;
    out[1][1] = m.e;
    out[2][2] = m.h;
    out[3][3] = m.a;
    out[4][4] = m.b;
    out
}

/// L_Q(E_i) : E_j at the interior point `p` of the physical region.
pub fn lq_matrix(p: OrderParams, opts: &ClosureOptions) -> Result<Matrix5> {
    p.check(0.0)?;
    let inv = invert_full(p, opts)?;
    Ok(lq_from_moments(&inv.moments))
}

/// The (E_3, E_4) block at polar angle `phi` for a degree-1/2 frame.
pub fn lq34_at(m: &MomentSet, phi: f64) -> [[f64; 2]; 2] {
    let (s, c) = phi.sin_cos();
    let (p, q) = (m.a + m.b, m.a - m.b);
    [[0.5 * (p + q * c), 0.5 * q * s], [0.5 * q * s, 0.5 * (p - q * c)]]
}

/// Entries (L E~3:E~3, L E~3:E~4, L E~4:E~4) in the half-angle frame
/// E~3 = cos(phi/2) E_3 + sin(phi/2) E_4, E~4 = sin(phi/2) E_3 - cos(phi/2) E_4.
pub fn rotate34(block: [[f64; 2]; 2], phi: f64) -> (f64, f64, f64) {
    let (s, c) = (0.5 * phi).sin_cos();
    let t3 = [c, s];
    let t4 = [s, -c];
    let form = |x: [f64; 2], y: [f64; 2]| {
        (0..2)
            .map(|i| (0..2).map(|j| x[i] * block[i][j] * y[j]).sum::<f64>())
            .sum::<f64>()
    };
    (form(t3, t3), form(t3, t4), form(t4, t4))
}
