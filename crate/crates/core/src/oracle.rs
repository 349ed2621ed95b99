//! Independent references: a Goursat solver for `φ_xy = sin φ` and the
//! closed-form pseudo-sphere in asymptotic coordinates.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::grid::{Field, Grid2};
use crate::potentials::{PotentialError, PotentialSpec};
use crate::quad::cumulative;
use crate::sym::{SurfaceGrid, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("Picard iteration did not converge in {iterations} steps (last change {change:.3e})")]
    NonConvergence { iterations: usize, change: f64 },
    #[error("boundary data has {got} values, grid axis has {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Fixed point of `φ = α(x) + β(y) + ∫₀ˣ∫₀ʸ sin φ`.
#[derive(Clone, Debug, Serialize)]
pub struct GoursatSolution {
    pub phi: Field<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm change in the last iteration.
    pub last_change: f64,
    /// Ratio of the last two sup-norm changes.
    pub contraction: f64,
}

impl GoursatSolution {
    /// `φ̌ = φ − α − β`.
    pub fn phi_check(&self) -> Field<f64> {
        let g = self.phi.grid;
        Field::from_fn(g, |i, j| self.phi.at(i, j) - self.alpha[i] - self.beta[j])
    }

    /// Sup of `|φ − α − β − ∬ sin φ|` at the returned iterate.
    pub fn weak_form_residual(&self) -> f64 {
        let integral = double_integral(&self.phi.map(|v| v.sin()));
        let chk = self.phi_check();
        chk.data
            .iter()
            .zip(&integral.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `∫₀ˣ∫₀ʸ g` on the grid with the fourth-order cumulative rule, from the origin.
pub fn double_integral(g: &Field<f64>) -> Field<f64> {
    let grid = g.grid;
    let (nx, ny) = (grid.nx(), grid.ny());
    let (i0, j0) = grid.origin();
    let rows: Vec<Vec<f64>> = (0..nx)
        .into_par_iter()
        .map(|i| cumulative(&g.data[i * ny..(i + 1) * ny], grid.y.step(), j0, &0.0))
        .collect();
    let cols: Vec<Vec<f64>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = (0..nx).map(|i| rows[i][j]).collect();
            cumulative(&col, grid.x.step(), i0, &0.0)
        })
        .collect();
    Field::from_fn(grid, |i, j| cols[j][i])
}

/// Picard iteration for the Goursat problem with data `α` on the `x`-axis
/// and `β` on the `y`-axis (values at the grid nodes).
pub fn goursat_solve(alpha: &[f64], beta: &[f64], grid: Grid2, tol: f64, max_iter: usize) -> Result<GoursatSolution, OracleError> {
    if alpha.len() != grid.nx() {
        return Err(OracleError::LengthMismatch { got: alpha.len(), expected: grid.nx() });
    }
    if beta.len() != grid.ny() {
        return Err(OracleError::LengthMismatch { got: beta.len(), expected: grid.ny() });
    }
    let base = Field::from_fn(grid, |i, j| alpha[i] + beta[j]);
    let mut phi = base.clone();
    let mut prev_change = f64::NAN;
    for it in 1..=max_iter {
        let integral = double_integral(&phi.map(|v| v.sin()));
        let next = Field {
            grid,
            data: base.data.iter().zip(&integral.data).map(|(a, b)| a + b).collect(),
        };
        let change = next
            .data
            .iter()
            .zip(&phi.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        phi = next;
        if change <= tol {
            return Ok(GoursatSolution {
                phi,
                alpha: alpha.to_vec(),
                beta: beta.to_vec(),
                iterations: it,
                last_change: change,
                contraction: change / prev_change,
            });
        }
        prev_change = change;
    }
    Err(OracleError::NonConvergence {
        iterations: max_iter,
        change: prev_change,
    })
}

/// Goursat solution for the boundary data of `spec` sampled at the grid nodes.
pub fn goursat_from_spec(spec: &PotentialSpec, grid: Grid2, tol: f64, max_iter: usize) -> Result<GoursatSolution, OracleError> {
    let alpha: Vec<f64> = grid.x.nodes().iter().map(|&x| spec.alpha.eval(x)).collect::<Result<_, _>>()?;
    let beta: Vec<f64> = grid.y.nodes().iter().map(|&y| spec.beta.eval(y)).collect::<Result<_, _>>()?;
    goursat_solve(&alpha, &beta, grid, tol, max_iter)
}

/// Closed-form pseudo-sphere data at one point in asymptotic coordinates.
#[derive(Clone, Copy, Debug)]
pub struct PseudosphereSample {
    pub f: Vec3,
    pub n: Vec3,
    pub omega: f64,
    pub fx: Vec3,
    pub fy: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
}

pub fn pseudosphere_closed_form(x: f64, y: f64) -> PseudosphereSample {
    let (s, d) = (x + y, x - y);
    let sech = 1.0 / s.cosh();
    let tanh = s.tanh();
    let (sd, cd) = d.sin_cos();
    let f = Vec3::new(cd * sech, sd * sech, s - tanh);
    // Unit normal orthogonal to f_x, f_y, oriented so that the angle from
    // f_x to f_y in the plane oriented by N is 4 tan⁻¹(e^{x+y}).
    let n = -Vec3::new(cd * tanh, sd * tanh, sech);
    let omega = 4.0 * s.exp().atan();
    // ∂_s sech = −sech·tanh, ∂_s (s − tanh) = tanh².
    let fx = Vec3::new(-sd * sech - cd * sech * tanh, cd * sech - sd * sech * tanh, tanh * tanh);
    let fy = Vec3::new(sd * sech - cd * sech * tanh, -cd * sech - sd * sech * tanh, tanh * tanh);
    let perp = n.cross(&fx);
    let (sh, ch) = (0.5 * omega).sin_cos();
    let e1 = fx * ch + perp * sh;
    let e2 = -fx * sh + perp * ch;
    PseudosphereSample { f, n, omega, fx, fy, e1, e2 }
}

/// Closed-form pseudo-sphere on a grid; `f` is translated so that `f(0,0) = 0`.
pub fn pseudosphere_surface(grid: Grid2) -> SurfaceGrid {
    let origin = pseudosphere_closed_form(0.0, 0.0).f;
    let samples: Vec<PseudosphereSample> = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            let (x, y) = grid.point(i, j);
            pseudosphere_closed_form(x, y)
        })
        .collect();
    SurfaceGrid {
        lambda: 1.0,
        grid,
        f: samples.iter().map(|s| s.f - origin).collect(),
        n: samples.iter().map(|s| s.n).collect(),
    }
}

/// `4 tan⁻¹(e^{x+y})` on a grid.
pub fn pseudosphere_angle(grid: Grid2) -> Field<f64> {
    Field::from_fn(grid, |i, j| {
        let (x, y) = grid.point(i, j);
        4.0 * (x + y).exp().atan()
    })
}
