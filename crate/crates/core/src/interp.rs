//! Cubic Lagrange interpolation on uniform axes and grids.

use crate::diff::Linear;
use crate::grid::{Axis, Field};

/// Weights and first two derivative weights of the cubic through 4 nodes.
fn lagrange4(nodes: [f64; 4], t: f64) -> [[f64; 4]; 3] {
    let mut out = [[0.0; 4]; 3];
    for k in 0..4 {
        let others: Vec<f64> = (0..4).filter(|&m| m != k).map(|m| nodes[m]).collect();
        let denom: f64 = others.iter().map(|o| nodes[k] - o).product();
        let d: Vec<f64> = others.iter().map(|o| t - o).collect();
        out[0][k] = d[0] * d[1] * d[2] / denom;
        out[1][k] = (d[1] * d[2] + d[0] * d[2] + d[0] * d[1]) / denom;
        out[2][k] = 2.0 * (d[0] + d[1] + d[2]) / denom;
    }
    out
}

/// Window start and weights (per unit of the axis parameter) at `t`.
fn axis_weights(axis: &Axis, t: f64) -> Option<(usize, [[f64; 4]; 3])> {
    let n = axis.len();
    if n < 4 {
        return None;
    }
    let h = axis.step();
    let slack = 1e-9 * h;
    if t < axis.lo() - slack || t > axis.hi() + slack {
        return None;
    }
    let c = ((t - axis.lo()) / h).floor() as isize;
    let start = (c - 1).clamp(0, n as isize - 4) as usize;
    let nodes = [0, 1, 2, 3].map(|k| axis.at(start + k));
    Some((start, lagrange4(nodes, t)))
}

/// Cubic interpolation of samples on `axis` at `t`: value and first derivative.
pub fn cubic<T: Linear>(values: &[T], axis: &Axis, t: f64) -> Option<(T, T)> {
    let (start, w) = axis_weights(axis, t)?;
    let pick = |row: &[f64; 4]| {
        let terms: Vec<(f64, &T)> = (0..4).map(|k| (row[k], &values[start + k])).collect();
        T::lincomb(&terms)
    };
    Some((pick(&w[0]), pick(&w[1])))
}

/// Value and derivatives of the bicubic interpolant at a point.
#[derive(Clone, Debug)]
pub struct Bicubic<T> {
    pub value: T,
    pub dx: T,
    pub dy: T,
    pub dxx: T,
    pub dxy: T,
    pub dyy: T,
}

/// Tensor-product cubic Lagrange interpolation of a grid field at `(x, y)`.
pub fn bicubic<T: Linear>(field: &Field<T>, x: f64, y: f64) -> Option<Bicubic<T>> {
    let (si, wx) = axis_weights(&field.grid.x, x)?;
    let (sj, wy) = axis_weights(&field.grid.y, y)?;
    let combine = |a: usize, b: usize| {
        let mut terms = Vec::with_capacity(16);
        for p in 0..4 {
            for q in 0..4 {
                terms.push((wx[a][p] * wy[b][q], field.at(si + p, sj + q)));
            }
        }
        T::lincomb(&terms)
    };
    Some(Bicubic {
        value: combine(0, 0),
        dx: combine(1, 0),
        dy: combine(0, 1),
        dxx: combine(2, 0),
        dxy: combine(1, 1),
        dyy: combine(0, 2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;

    #[test]
    fn cubic_reproduces_cubics() {
        let a = Axis::symmetric(1.0, 11).unwrap();
        let f = |t: f64| 2.0 - t + 0.5 * t * t - 3.0 * t * t * t;
        let v: Vec<f64> = a.nodes().into_iter().map(f).collect();
        for t in [-1.0, -0.93, -0.2, 0.0, 0.37, 0.99, 1.0] {
            let (val, d) = cubic(&v, &a, t).unwrap();
            assert!((val - f(t)).abs() < 1e-13);
            assert!((d - (-1.0 + t - 9.0 * t * t)).abs() < 1e-12);
        }
        assert!(cubic(&v, &a, 1.5).is_none());
    }

    #[test]
    fn bicubic_reproduces_bicubics() {
        let g = Grid2::new(Axis::symmetric(1.0, 9).unwrap(), Axis::new(-0.5, 1.5, 9).unwrap());
        let f = |x: f64, y: f64| x * x * x * y - 2.0 * x * y * y + y * y * y + 1.0;
        let field = Field::from_fn(g, |i, j| {
            let (x, y) = g.point(i, j);
            f(x, y)
        });
        for (x, y) in [(0.1, 0.2), (-0.99, 1.4), (0.7, -0.5)] {
            let b = bicubic(&field, x, y).unwrap();
            assert!((b.value - f(x, y)).abs() < 1e-12);
            assert!((b.dx - (3.0 * x * x * y - 2.0 * y * y)).abs() < 1e-11);
            assert!((b.dy - (x * x * x - 4.0 * x * y + 3.0 * y * y)).abs() < 1e-11);
            assert!((b.dxy - (3.0 * x * x - 4.0 * y)).abs() < 1e-10);
            assert!((b.dxx - 6.0 * x * y).abs() < 1e-10);
            assert!((b.dyy - (-4.0 * x + 6.0 * y)).abs() < 1e-10);
        }
    }
}
