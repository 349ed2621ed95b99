//! Uniform 1-D axes that contain the origin as a node, and their products.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("axis needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("invalid interval [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
    #[error("0 is not a node of the axis [{lo}, {hi}] with {n} nodes")]
    OriginNotOnGrid { lo: f64, hi: f64, n: usize },
}

/// `n` equispaced nodes `lo + i·step`, one of which is exactly 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    step: f64,
    n: usize,
    origin: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self, GridError> {
        if n < 3 {
            return Err(GridError::TooFewNodes { min: 3, got: n });
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= 0.0 && hi >= 0.0 && lo < hi) {
            return Err(GridError::BadInterval { lo, hi });
        }
        let step = (hi - lo) / (n - 1) as f64;
        let origin = (-lo / step).round();
        if (lo + origin * step).abs() > 1e-9 * step {
            return Err(GridError::OriginNotOnGrid { lo, hi, n });
        }
        Ok(Self {
            step,
            n,
            origin: origin as usize,
        })
    }

    /// Symmetric axis `[-half, half]` with odd `n`.
    pub fn symmetric(half: f64, n: usize) -> Result<Self, GridError> {
        Self::new(-half, half, n)
    }

    /// Axis `[-(origin)·step, (n-1-origin)·step]` built directly from its step.
    pub fn from_step(step: f64, n: usize, origin: usize) -> Result<Self, GridError> {
        if n < 3 {
            return Err(GridError::TooFewNodes { min: 3, got: n });
        }
        if !(step.is_finite() && step > 0.0) || origin >= n {
            return Err(GridError::BadInterval {
                lo: -(origin as f64) * step,
                hi: (n as f64 - 1.0 - origin as f64) * step,
            });
        }
        Ok(Self { step, n, origin })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    /// Node value; exact 0 at the origin index.
    pub fn at(&self, i: usize) -> f64 {
        (i as f64 - self.origin as f64) * self.step
    }

    pub fn lo(&self) -> f64 {
        self.at(0)
    }

    pub fn hi(&self) -> f64 {
        self.at(self.n - 1)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.at(i)).collect()
    }

    /// Index of the node closest to `t`, clamped to the axis.
    pub fn nearest(&self, t: f64) -> usize {
        let k = (t / self.step).round() + self.origin as f64;
        k.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Every `factor`-th node around the origin, when the lattice allows it.
    pub fn coarsen(&self, factor: usize) -> Option<Axis> {
        if factor == 0 || self.origin % factor != 0 || (self.n - 1 - self.origin) % factor != 0 {
            return None;
        }
        Axis::from_step(
            self.step * factor as f64,
            (self.n - 1) / factor + 1,
            self.origin / factor,
        )
        .ok()
    }
}

/// Tensor grid; node `(i, j)` sits at `(x_i, y_j)` with flat index `i·ny + j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub x: Axis,
    pub y: Axis,
}

impl Grid2 {
    pub fn new(x: Axis, y: Axis) -> Self {
        Self { x, y }
    }

    /// `n × n` nodes on `[-half, half]²`.
    pub fn square(half: f64, n: usize) -> Result<Self, GridError> {
        let a = Axis::symmetric(half, n)?;
        Ok(Self { x: a, y: a })
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny() + j
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k / self.ny(), k % self.ny())
    }

    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x.at(i), self.y.at(j))
    }

    pub fn origin(&self) -> (usize, usize) {
        (self.x.origin(), self.y.origin())
    }
}

/// Values on a [`Grid2`], stored in flat index order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field<T> {
    pub grid: Grid2,
    pub data: Vec<T>,
}

impl<T: Clone> Field<T> {
    pub fn from_fn(grid: Grid2, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            for j in 0..grid.ny() {
                data.push(f(i, j));
            }
        }
        Self { grid, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &T {
        &self.data[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        let k = self.grid.idx(i, j);
        &mut self.data[k]
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            data: self.data.iter().map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_exact_node() {
        let a = Axis::symmetric(2.0, 129).unwrap();
        assert_eq!(a.origin(), 64);
        assert_eq!(a.at(64), 0.0);
        assert_eq!(a.step(), 1.0 / 32.0);
        assert_eq!(a.lo(), -2.0);
        assert_eq!(a.hi(), 2.0);
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(matches!(Axis::new(-1.0, 1.0, 2), Err(GridError::TooFewNodes { .. })));
        assert!(matches!(Axis::new(0.5, 1.0, 5), Err(GridError::BadInterval { .. })));
        assert!(matches!(Axis::new(-1.0, 1.0, 4), Err(GridError::OriginNotOnGrid { .. })));
    }

    #[test]
    fn coarsen_keeps_origin() {
        let a = Axis::symmetric(2.0, 129).unwrap();
        let c = a.coarsen(2).unwrap();
        assert_eq!(c.len(), 65);
        assert_eq!(c.at(c.origin()), 0.0);
        assert_eq!(c.step(), 1.0 / 16.0);
        assert!(Axis::new(-1.0, 2.0, 4).unwrap().coarsen(2).is_none());
    }

    #[test]
    fn flat_index_round_trip() {
        let g = Grid2::new(Axis::new(-1.0, 2.0, 4).unwrap(), Axis::symmetric(1.0, 5).unwrap());
        for k in 0..g.len() {
            let (i, j) = g.ij(k);
            assert_eq!(g.idx(i, j), k);
        }
        assert_eq!(g.point(1, 2), (0.0, 0.0));
    }
}
