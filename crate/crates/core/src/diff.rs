//! Finite differences on uniform axes and grid fields.
//!
//! Stencils are built with Fornberg's recursion, centered where they fit and
//! shifted one-sided at the ends. Optional break indices split an axis into
//! pieces that no stencil crosses, which keeps kinks of C⁰ data out of
//! derivative estimates taken on either side.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::grid::Field;
use crate::laurent::{Mat2, TwistedLoop, C64};

/// Values that can be combined linearly with real weights.
pub trait Linear: Clone + Send + Sync {
    fn lincomb(terms: &[(f64, &Self)]) -> Self;
}

impl Linear for f64 {
    fn lincomb(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(w, v)| w * **v).sum()
    }
}

impl Linear for C64 {
    fn lincomb(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(w, v)| **v * *w).sum()
    }
}

impl Linear for Vector3<f64> {
    fn lincomb(terms: &[(f64, &Self)]) -> Self {
        terms
            .iter()
            .fold(Vector3::zeros(), |acc, (w, v)| acc + **v * *w)
    }
}

impl Linear for Mat2 {
    fn lincomb(terms: &[(f64, &Self)]) -> Self {
        terms
            .iter()
            .fold(Mat2::zeros(), |acc, (w, v)| acc + **v * C64::new(*w, 0.0))
    }
}

impl Linear for TwistedLoop {
    fn lincomb(terms: &[(f64, &Self)]) -> Self {
        TwistedLoop::linear_combination(terms)
    }
}

/// Weights of the `m`-th derivative at 0 for nodes at `offsets` (Fornberg).
pub fn fd_weights(offsets: &[f64], m: usize) -> Vec<f64> {
    let n = offsets.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Derivative order `m` at accuracy `order` on an axis of `n` nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    pub m: usize,
    pub order: usize,
    n: usize,
    pieces: Vec<(usize, usize)>,
}

impl Stencil {
    pub fn new(m: usize, order: usize, n: usize) -> Self {
        Self::with_breaks(m, order, n, &[])
    }

    /// Axis split at the given node indices; each break node belongs to both
    /// adjacent pieces and is differentiated from the left piece.
    pub fn with_breaks(m: usize, order: usize, n: usize, breaks: &[usize]) -> Self {
        let mut cuts: Vec<usize> = breaks.iter().copied().filter(|&b| b > 0 && b + 1 < n).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut pieces = Vec::new();
        let mut start = 0;
        for b in cuts {
            pieces.push((start, b));
            start = b;
        }
        pieces.push((start, n - 1));
        Self { m, order, n, pieces }
    }

    /// Node range of the piece containing node `i`.
    fn piece(&self, i: usize) -> (usize, usize) {
        *self
            .pieces
            .iter()
            .find(|(a, b)| *a <= i && i <= *b)
            .unwrap_or(&(0, self.n - 1))
    }

    /// Node indices and weights (for unit spacing) for the derivative at `i`.
    /// Returns `None` when the piece is too short for the requested order.
    pub fn at(&self, i: usize) -> Option<(usize, Vec<f64>)> {
        let (a, b) = self.piece(i);
        let width_centered = {
            let w = self.m + self.order - 1;
            if w % 2 == 0 { w + 1 } else { w }
        };
        let half = width_centered / 2;
        let (start, width) = if i >= a + half && i + half <= b {
            (i - half, width_centered)
        } else {
            let w = self.m + self.order;
            if b - a + 1 < w {
                return None;
            }
            let start = if i < a + half { a } else { b + 1 - w };
            (start, w)
        };
        let offsets: Vec<f64> = (start..start + width).map(|k| k as f64 - i as f64).collect();
        Some((start, fd_weights(&offsets, self.m)))
    }
}

/// Derivative of sampled values at node `i`, spacing `h`.
pub fn derivative<T: Linear>(values: &[T], h: f64, i: usize, st: &Stencil) -> Option<T> {
    let (start, w) = st.at(i)?;
    let scale = h.powi(st.m as i32);
    let terms: Vec<(f64, &T)> = w
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(k, c)| (c / scale, &values[start + k]))
        .collect();
    Some(T::lincomb(&terms))
}

/// Derivative along an entire sampled line.
pub fn derivative_line<T: Linear>(values: &[T], h: f64, st: &Stencil) -> Vec<T> {
    (0..values.len())
        .map(|i| derivative(values, h, i, st).expect("axis long enough for stencil"))
        .collect()
}

/// Axis selector for grid derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    X,
    Y,
}

/// Partial derivative of a grid field along `dir` with derivative order `m`
/// and accuracy `order`, never differencing across the given break nodes.
pub fn partial<T: Linear>(field: &Field<T>, dir: Dir, m: usize, order: usize, breaks: &[usize]) -> Field<T> {
    let g = field.grid;
    let (nx, ny) = (g.nx(), g.ny());
    let data: Vec<T> = match dir {
        Dir::Y => {
            let st = Stencil::with_breaks(m, order, ny, breaks);
            let h = g.y.step();
            (0..nx)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let row = &field.data[i * ny..(i + 1) * ny];
                    derivative_line(row, h, &st)
                })
                .collect()
        }
        Dir::X => {
            let st = Stencil::with_breaks(m, order, nx, breaks);
            let h = g.x.step();
            let cols: Vec<Vec<T>> = (0..ny)
                .into_par_iter()
                .map(|j| {
                    let col: Vec<T> = (0..nx).map(|i| field.data[i * ny + j].clone()).collect();
                    derivative_line(&col, h, &st)
                })
                .collect();
            let mut out = Vec::with_capacity(nx * ny);
            for i in 0..nx {
                for col in &cols {
                    out.push(col[i].clone());
                }
            }
            out
        }
    };
    Field { grid: g, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Grid2};

    #[test]
    fn fornberg_known_weights() {
        let w = fd_weights(&[-1.0, 0.0, 1.0], 1);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w = fd_weights(&[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let e = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(e) {
            assert!((a - b).abs() < 1e-14);
        }
        let w = fd_weights(&[0.0, 1.0, 2.0], 1);
        assert!((w[0] + 1.5).abs() < 1e-15 && (w[1] - 2.0).abs() < 1e-15 && (w[2] + 0.5).abs() < 1e-15);
        let w = fd_weights(&[-1.0, 0.0, 1.0], 2);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] + 2.0).abs() < 1e-15);
    }

    fn poly_check(m: usize, order: usize) {
        // Exact on polynomials of degree `order + m - 1` everywhere on the axis.
        let n = 12;
        let h = 0.1;
        let deg = (order + m - 1) as i32;
        let f: Vec<f64> = (0..n).map(|k| (k as f64 * h).powi(deg)).collect();
        let st = Stencil::new(m, order, n);
        for i in 0..n {
            let t = i as f64 * h;
            let exact: f64 = (0..m).map(|r| (deg - r as i32) as f64).product::<f64>() * t.powi(deg - m as i32);
            let d = derivative(&f, h, i, &st).unwrap();
            assert!((d - exact).abs() < 1e-8, "m={m} order={order} i={i}: {d} vs {exact}");
        }
    }

    #[test]
    fn stencils_exact_on_polynomials() {
        for (m, o) in [(1, 2), (1, 4), (2, 2), (2, 4), (3, 4)] {
            poly_check(m, o);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |n: usize| {
            let h = 2.0 / (n - 1) as f64;
            let f: Vec<f64> = (0..n).map(|k| (k as f64 * h).sin()).collect();
            let d = derivative_line(&f, h, &Stencil::new(1, 4, n));
            d.iter().enumerate().map(|(k, v)| (v - (k as f64 * h).cos()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(33) / err(65);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn breaks_keep_kink_out() {
        let n = 21;
        let h = 0.1;
        let f: Vec<f64> = (0..n).map(|k| ((k as f64 - 10.0) * h).abs()).collect();
        let st = Stencil::with_breaks(1, 4, n, &[10]);
        for i in 0..n {
            let d = derivative(&f, h, i, &st).unwrap();
            let expected = if i <= 10 { -1.0 } else { 1.0 };
            assert!((d - expected).abs() < 1e-12, "node {i}: {d}");
        }
    }

    #[test]
    fn grid_partials_of_product() {
        let g = Grid2::new(Axis::symmetric(1.0, 21).unwrap(), Axis::symmetric(1.0, 17).unwrap());
        let f = Field::from_fn(g, |i, j| {
            let (x, y) = g.point(i, j);
            x * x * x * y * y
        });
        let fx = partial(&f, Dir::X, 1, 4, &[]);
        let fxy = partial(&fx, Dir::Y, 1, 4, &[]);
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                let (x, y) = g.point(i, j);
                assert!((fx.at(i, j) - 3.0 * x * x * y * y).abs() < 1e-12);
                assert!((fxy.at(i, j) - 6.0 * x * x * y).abs() < 1e-11);
            }
        }
    }
}
