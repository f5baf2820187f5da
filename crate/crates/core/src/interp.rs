//! Finite-difference weights on arbitrary nodes and local polynomial interpolation.

/// Fornberg's weights: `w[m][j]` approximates the m-th derivative at `x0` from `xs[j]`.
pub fn fornberg(x0: f64, xs: &[f64], max_deriv: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_deriv + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Index of the first of `width` consecutive nodes centred on `x`.
pub fn stencil_start(xs: &[f64], x: f64, width: usize) -> usize {
    let n = xs.len();
    let width = width.min(n);
    let pos = xs.partition_point(|&t| t < x);
    let start = pos.saturating_sub(width / 2);
    start.min(n - width)
}

/// Local interpolant of several nodal fields sharing the same nodes.
pub struct LocalInterp<'a> {
    pub xs: &'a [f64],
    pub width: usize,
}

impl<'a> LocalInterp<'a> {
    pub fn new(xs: &'a [f64], width: usize) -> Self {
        Self { xs, width }
    }

    /// Value and derivatives up to `max_deriv` of every field at `x`.
    pub fn eval(&self, x: f64, fields: &[&[f64]], max_deriv: usize) -> Vec<Vec<f64>> {
        let s = stencil_start(self.xs, x, self.width);
        let nodes = &self.xs[s..s + self.width.min(self.xs.len())];
        let w = fornberg(x, nodes, max_deriv);
        fields
            .iter()
            .map(|f| {
                (0..=max_deriv)
                    .map(|m| w[m].iter().zip(&f[s..]).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect()
    }
}
