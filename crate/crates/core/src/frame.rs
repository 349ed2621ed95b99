//! Half frames `U₊(x)`, `U₋(y)`, the per-node Birkhoff split
//! `U₋⁻¹U₊ = L₊L₋⁻¹`, the extended frame `Û = U₊L₋ = U₋L₊`, and the
//! connection data read off the split factors.

use log::debug;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::diff::{partial, Dir};
use crate::grid::{Axis, Field, Grid2, GridError};
use crate::laurent::{mat_norm, unitarity_check, DegreeWindow, LoopError, Mat2, TwistedLoop, UnitarityResidual, C64};
use crate::potentials::{BoundaryFn, PotentialError, PotentialSpec};

pub const DEFAULT_TRUNC: usize = 16;

const I2: C64 = C64::new(0.0, 0.5);

#[derive(Debug, Error)]
pub enum FrameError {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("axis [{lo}, {hi}] is not contained in the {name} interval [{flo}, {fhi}]")]
    AxisOutside { name: String, lo: f64, hi: f64, flo: f64, fhi: f64 },
    #[error("truncation degree must be at least 1")]
    ZeroTruncation,
    #[error("half frames use different truncations ({plus} vs {minus})")]
    TruncationMismatch { plus: usize, minus: usize },
    #[error("Birkhoff split failed at (x, y) = ({x}, {y}): singular Toeplitz system, truncation too small")]
    SplitFailure { x: f64, y: f64 },
}

/// Which boundary ODE a half frame solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    /// `U₊' = U₊ η₊` in `x`, nonnegative degrees.
    Plus,
    /// `U₋' = U₋ η₋` in `y`, nonpositive degrees.
    Minus,
}

/// Solutions of one boundary ODE at the nodes of an axis.
#[derive(Clone, Debug)]
pub struct HalfFrameFamily {
    pub side: Side,
    pub axis: Axis,
    pub trunc: usize,
    pub loops: Vec<TwistedLoop>,
}

/// `diag(e^{−iθ/2}, e^{iθ/2})` as its two diagonal entries.
fn gauge(theta: f64) -> (C64, C64) {
    (C64::from_polar(1.0, -0.5 * theta), C64::from_polar(1.0, 0.5 * theta))
}

/// `exp(h(ν a P + d σ₃))` as a loop in `ν = λ^{±1}`, truncated at degree `trunc`.
///
/// Since `P` and `σ₃` anticommute, `M² = s·I` with `s = a²ν² + d²`, so
/// `exp(hM) = C(s) I + S(s) M` with `C = Σ h^{2n}sⁿ/(2n)!`, `S = Σ h^{2n+1}sⁿ/(2n+1)!`.
fn segment_exp(side: Side, h: f64, a: C64, d: C64, trunc: usize) -> TwistedLoop {
    let m = trunc / 2 + 1;
    let s = {
        let mut s = vec![C64::new(0.0, 0.0); m];
        s[0] = d * d;
        if m > 1 {
            s[1] = a * a;
        }
        s
    };
    let mut cpoly = vec![C64::new(0.0, 0.0); m];
    let mut spoly = vec![C64::new(0.0, 0.0); m];
    let mut pw = vec![C64::new(0.0, 0.0); m];
    pw[0] = C64::new(1.0, 0.0);
    // h^{2n}/(2n)! and h^{2n+1}/(2n+1)!
    let mut fc = 1.0;
    let mut fs = h;
    for n in 0..200 {
        let mut size = 0.0_f64;
        for k in 0..m {
            cpoly[k] += pw[k] * fc;
            spoly[k] += pw[k] * fs;
            size = size.max(pw[k].norm() * fc.abs().max(fs.abs()));
        }
        if n > m && size < 1e-20 {
            break;
        }
        let mut next = vec![C64::new(0.0, 0.0); m];
        for i in 0..m {
            for j in 0..m - i {
                next[i + j] += pw[i] * s[j];
            }
        }
        pw = next;
        let (k1, k2) = ((2 * n + 1) as f64, (2 * n + 2) as f64);
        fc *= h * h / (k1 * k2);
        fs *= h * h / (k2 * (k2 + 1.0));
    }
    let mut pairs = vec![[C64::new(0.0, 0.0); 2]; trunc + 1];
    for k in 0..m {
        if 2 * k <= trunc {
            pairs[2 * k] = [cpoly[k] + spoly[k] * d, cpoly[k] - spoly[k] * d];
        }
        if 2 * k + 1 <= trunc {
            let v = spoly[k] * a;
            pairs[2 * k + 1] = [v, v];
        }
    }
    match side {
        Side::Plus => TwistedLoop::from_pairs(0, pairs),
        Side::Minus => {
            pairs.reverse();
            TwistedLoop::from_pairs(-(trunc as i32), pairs)
        }
    }
    .expect("window within limits")
}

/// Sorted union of axis nodes and boundary samples inside the axis range;
/// each entry carries the axis index it coincides with, if any.
fn breakpoints(axis: &Axis, f: &BoundaryFn) -> Vec<(f64, Option<usize>)> {
    let (lo, hi) = (axis.lo(), axis.hi());
    let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    let mut pts: Vec<(f64, Option<usize>)> = (0..axis.len()).map(|i| (axis.at(i), Some(i))).collect();
    pts.extend(
        f.nodes()
            .iter()
            .filter(|&&t| t > lo + tol && t < hi - tol)
            .map(|&t| (t, None)),
    );
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, Option<usize>)> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last_mut() {
            Some(last) if (p.0 - last.0).abs() <= tol => {
                if p.1.is_some() {
                    *last = p;
                }
            }
            _ => out.push(p),
        }
    }
    out
}

/// Solves the boundary ODE on `axis` outward from 0.
///
/// The stored boundary function is piecewise linear (or constant) between
/// breakpoints, so on each segment `A(t) = D(θ)A₀D(θ)⁻¹` with linear `θ`
/// and the gauge-transformed system has a constant matrix; each segment is
/// propagated by its exact exponential, truncated at degree `trunc`.
pub fn integrate_half_frame(
    spec: &PotentialSpec,
    side: Side,
    axis: Axis,
    trunc: usize,
) -> Result<HalfFrameFamily, FrameError> {
    if trunc == 0 {
        return Err(FrameError::ZeroTruncation);
    }
    DegreeWindow::symmetric(trunc)?;
    let f = match side {
        Side::Plus => &spec.alpha,
        Side::Minus => &spec.beta,
    };
    let (flo, fhi) = f.interval();
    let slack = 1e-12 * (1.0 + flo.abs().max(fhi.abs()));
    if axis.lo() < flo - slack || axis.hi() > fhi + slack {
        return Err(FrameError::AxisOutside {
            name: f.name().to_string(),
            lo: axis.lo(),
            hi: axis.hi(),
            flo,
            fhi,
        });
    }
    let pts = breakpoints(&axis, f);
    let start = pts
        .iter()
        .position(|p| p.1 == Some(axis.origin()))
        .expect("origin is an axis node");
    let (sign, a0) = match side {
        Side::Plus => (1.0, I2),
        Side::Minus => (-1.0, -I2),
    };
    let mut loops = vec![TwistedLoop::identity(); axis.len()];
    for forward in [true, false] {
        let mut u = TwistedLoop::identity();
        let mut k = start;
        loop {
            let next = if forward {
                if k + 1 >= pts.len() {
                    break;
                }
                k + 1
            } else {
                if k == 0 {
                    break;
                }
                k - 1
            };
            let (t0, t1) = (pts[k].0, pts[next].0);
            let h = t1 - t0;
            let (th0, th1) = f.segment_values(t0, t1)?;
            let slope = (th1 - th0) / h;
            // D(sθ)⁻¹ D(sθ)' = −(i/2) s θ' σ₃ with s = ±1 by side.
            let d = -I2 * (sign * slope);
            let e = segment_exp(side, h, a0, d, trunc);
            let (g0a, g0d) = gauge(sign * th0);
            let (g1a, g1d) = gauge(-sign * th1);
            let v = u.mul_diag_right(g0a, g0d);
            let window = e.window();
            u = v.mul(&e, window).mul_diag_right(g1a, g1d);
            if let Some(i) = pts[next].1 {
                loops[i] = u.clone();
            }
            k = next;
        }
    }
    Ok(HalfFrameFamily {
        side,
        axis,
        trunc,
        loops,
    })
}

/// Normalized Birkhoff factors of `G = L₊ L₋⁻¹`.
#[derive(Clone, Debug)]
pub struct Split {
    pub plus: TwistedLoop,
    pub minus: TwistedLoop,
    /// Largest negative-degree coefficient of the full product `G·L₋`.
    pub residual: f64,
}

/// Splits `G` with `L₋ = I + Σ_{k=1}^{m} λ^{−k}Q_k`.
///
/// The vanishing of the degrees `−1..−m` of `G·L₋` is a Toeplitz system in
/// the `Q_k`. Parity leaves one unknown per `Q_k` and column `c`, namely the
/// entry in row `(k + c) mod 2`, and one equation per degree `n`, in row
/// `(n + c) mod 2`. Returns `None` when the system is singular.
pub fn birkhoff_split(g: &TwistedLoop, m: usize) -> Option<Split> {
    let mi = m as i32;
    let mut minus_pairs = vec![[C64::new(0.0, 0.0); 2]; m + 1];
    minus_pairs[m] = [C64::new(1.0, 0.0); 2];
    let entry = |deg: i32, row: usize, col: usize| -> C64 { g.coeff(deg)[(row, col)] };
    for c in 0..2usize {
        let mut a = DMatrix::<C64>::zeros(m, m);
        let mut rhs = DVector::<C64>::zeros(m);
        for (r, n) in (1..=mi).map(|k| -k).enumerate() {
            let rho = (n + c as i32).rem_euclid(2) as usize;
            rhs[r] = -entry(n, rho, c);
            for k in 1..=mi {
                let col = (k as usize + c) % 2;
                a[(r, (k - 1) as usize)] = entry(n + k, rho, col);
            }
        }
        let q = a.lu().solve(&rhs)?;
        if q.iter().any(|z| !z.is_finite()) {
            return None;
        }
        for k in 1..=m {
            // Even k stores (C11, C22), odd k stores (C12, C21): either way
            // the pair slot equals the row of the unknown.
            minus_pairs[m - k][(k + c) % 2] = q[k - 1];
        }
    }
    let minus = TwistedLoop::from_pairs(-mi, minus_pairs).ok()?;
    let full = g.mul_full(&minus).ok()?;
    let residual = full.norm_outside(DegreeWindow::new(0, full.k_max()).ok()?);
    let plus = full.restrict(DegreeWindow::new(0, g.k_max().max(0)).ok()?);
    Some(Split { plus, minus, residual })
}

/// Options for [`build_frame_field`].
#[derive(Clone, Copy, Debug)]
pub struct FrameOptions {
    /// Keep the per-node `L₊`, `L₋` loops (memory heavy on large grids).
    pub keep_factors: bool,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self { keep_factors: true }
    }
}

/// Extended frame and split data on a grid.
#[derive(Clone, Debug)]
pub struct FrameField {
    pub grid: Grid2,
    pub trunc: usize,
    pub u_hat: Vec<TwistedLoop>,
    pub l_plus: Option<Vec<TwistedLoop>>,
    pub l_minus: Option<Vec<TwistedLoop>>,
    /// Degree-0 `(1,1)` entry of `L₊`.
    pub a0: Vec<C64>,
    /// Degree `−1` `(1,2)` entry of `L₋`.
    pub b1: Vec<C64>,
    pub split_residual: Vec<f64>,
    /// `‖U₊L₋ − U₋L₊‖` per node.
    pub consistency: Vec<f64>,
}

struct NodeResult {
    u_hat: TwistedLoop,
    l_plus: Option<TwistedLoop>,
    l_minus: Option<TwistedLoop>,
    a0: C64,
    b1: C64,
    residual: f64,
    consistency: f64,
}

/// Splits `U₋(y_j)⁻¹U₊(x_i)` at every node in parallel.
pub fn build_frame_field(
    plus: &HalfFrameFamily,
    minus: &HalfFrameFamily,
    opts: FrameOptions,
) -> Result<FrameField, FrameError> {
    if plus.trunc != minus.trunc {
        return Err(FrameError::TruncationMismatch {
            plus: plus.trunc,
            minus: minus.trunc,
        });
    }
    let n = plus.trunc;
    let grid = Grid2::new(plus.axis, minus.axis);
    let full = DegreeWindow::symmetric(n)?;
    let neg = DegreeWindow::new(-(n as i32), 0)?;
    let minus_inv: Vec<TwistedLoop> = minus
        .loops
        .par_iter()
        .map(|u| u.inverse(neg))
        .collect::<Result<_, _>>()?;
    let nodes: Vec<Result<NodeResult, FrameError>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = grid.ij(k);
            let up = &plus.loops[i];
            let um = &minus.loops[j];
            let g = minus_inv[j].mul(up, full);
            let (x, y) = grid.point(i, j);
            let split = birkhoff_split(&g, n).ok_or(FrameError::SplitFailure { x, y })?;
            let u_hat = up.mul(&split.minus, full);
            let other = um.mul(&split.plus, full);
            let consistency = u_hat.distance(&other);
            Ok(NodeResult {
                a0: split.plus.pair(0)[0],
                b1: split.minus.pair(-1)[0],
                residual: split.residual,
                consistency,
                u_hat,
                l_plus: opts.keep_factors.then_some(split.plus),
                l_minus: opts.keep_factors.then_some(split.minus),
            })
        })
        .collect();
    let mut field = FrameField {
        grid,
        trunc: n,
        u_hat: Vec::with_capacity(grid.len()),
        l_plus: opts.keep_factors.then(|| Vec::with_capacity(grid.len())),
        l_minus: opts.keep_factors.then(|| Vec::with_capacity(grid.len())),
        a0: Vec::with_capacity(grid.len()),
        b1: Vec::with_capacity(grid.len()),
        split_residual: Vec::with_capacity(grid.len()),
        consistency: Vec::with_capacity(grid.len()),
    };
    for r in nodes {
        let r = r?;
        field.u_hat.push(r.u_hat);
        if let (Some(v), Some(l)) = (field.l_plus.as_mut(), r.l_plus) {
            v.push(l);
        }
        if let (Some(v), Some(l)) = (field.l_minus.as_mut(), r.l_minus) {
            v.push(l);
        }
        field.a0.push(r.a0);
        field.b1.push(r.b1);
        field.split_residual.push(r.residual);
        field.consistency.push(r.consistency);
    }
    debug!(
        "frame field {}x{} trunc {}: max split residual {:.3e}, max consistency {:.3e}",
        grid.nx(),
        grid.ny(),
        n,
        field.max_split_residual(),
        field.max_consistency()
    );
    Ok(field)
}

/// Integrates both half frames on `grid` and splits at every node.
pub fn frame_field(spec: &PotentialSpec, grid: Grid2, trunc: usize, opts: FrameOptions) -> Result<FrameField, FrameError> {
    let (plus, minus) = rayon::join(
        || integrate_half_frame(spec, Side::Plus, grid.x, trunc),
        || integrate_half_frame(spec, Side::Minus, grid.y, trunc),
    );
    build_frame_field(&plus?, &minus?, opts)
}

impl FrameField {
    pub fn at(&self, i: usize, j: usize) -> &TwistedLoop {
        &self.u_hat[self.grid.idx(i, j)]
    }

    pub fn max_split_residual(&self) -> f64 {
        self.split_residual.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_consistency(&self) -> f64 {
        self.consistency.iter().copied().fold(0.0, f64::max)
    }

    /// Max unitarity/determinant residual of `Û` over all nodes and `lambdas`.
    pub fn unitarity(&self, lambdas: &[f64]) -> UnitarityResidual {
        self.u_hat
            .par_iter()
            .map(|u| unitarity_check(u, lambdas))
            .reduce(UnitarityResidual::default, UnitarityResidual::merge)
    }

    /// `Û` as a grid field of loops.
    pub fn u_field(&self) -> Field<TwistedLoop> {
        Field {
            grid: self.grid,
            data: self.u_hat.clone(),
        }
    }
}

/// Connection data per node, read algebraically from the split factors.
#[derive(Clone, Debug, Serialize)]
pub struct ConnectionField {
    pub grid: Grid2,
    /// α at the grid abscissae.
    pub alpha: Vec<f64>,
    /// β at the grid ordinates.
    pub beta: Vec<f64>,
    /// `φ̂`, continuous along rows from the `y`-axis.
    pub phi_hat: Vec<f64>,
    pub r: Vec<f64>,
}

impl ConnectionField {
    #[inline]
    pub fn phi(&self, i: usize, j: usize) -> f64 {
        self.phi_hat[self.grid.idx(i, j)]
    }

    /// `φ̂ + α` at a node.
    #[inline]
    pub fn angle(&self, i: usize, j: usize) -> f64 {
        self.phi(i, j) + self.alpha[i]
    }

    pub fn angle_field(&self) -> Field<f64> {
        Field::from_fn(self.grid, |i, j| self.angle(i, j))
    }

    /// `p = i e^{iφ̂}`.
    pub fn p(&self, i: usize, j: usize) -> C64 {
        C64::new(0.0, 1.0) * C64::from_polar(1.0, self.phi(i, j))
    }

    /// `q = i e^{−iα}`.
    pub fn q(&self, i: usize) -> C64 {
        C64::new(0.0, 1.0) * C64::from_polar(1.0, -self.alpha[i])
    }

    /// λ⁰ and λ¹ coefficients of `ω̂₁ = (i/2)[[r, λe^{−iα}], [λe^{iα}, −r]]`.
    pub fn omega1(&self, i: usize, j: usize) -> (Mat2, Mat2) {
        let r = self.r[self.grid.idx(i, j)];
        let z = C64::new(0.0, 0.0);
        let a = self.alpha[i];
        (
            Mat2::new(I2 * r, z, z, -I2 * r),
            Mat2::new(z, I2 * C64::from_polar(1.0, -a), I2 * C64::from_polar(1.0, a), z),
        )
    }

    /// λ⁻¹ coefficient of `ω̂₂ = −(i/2)λ⁻¹[[0, e^{iφ̂}], [e^{−iφ̂}, 0]]`.
    pub fn omega2(&self, i: usize, j: usize) -> Mat2 {
        let z = C64::new(0.0, 0.0);
        let p = self.phi(i, j);
        Mat2::new(z, -I2 * C64::from_polar(1.0, p), -I2 * C64::from_polar(1.0, -p), z)
    }
}

/// Wraps an angle difference into `(−π, π]`.
pub fn wrap_pi(d: f64) -> f64 {
    let w = d.rem_euclid(std::f64::consts::TAU);
    if w > std::f64::consts::PI {
        w - std::f64::consts::TAU
    } else {
        w
    }
}

/// Reads `φ̂ = β − 2 arg ℓ₊₀` and `r = −2 Re(ℓ₋₁ e^{iα})` at every node.
///
/// The λ⁻¹ part of `Û⁻¹Û_y = L₊⁻¹η₋L₊ + L₊⁻¹∂_yL₊` is `η₋` conjugated by
/// `diag(a₀, ā₀)`, and the λ⁰ part of `Û⁻¹Û_x` is `[η₊, Q₁]` with
/// `Q₁ = [[0, b], [−b̄, 0]]`, so no differencing is needed. The phase of
/// `a₀` is unwrapped along each row from the `y`-axis, where `a₀ = 1`.
pub fn extract_connection(frame: &FrameField, spec: &PotentialSpec) -> Result<ConnectionField, FrameError> {
    let g = frame.grid;
    let alpha: Vec<f64> = (0..g.nx()).map(|i| spec.alpha.eval(g.x.at(i))).collect::<Result<_, _>>()?;
    let beta: Vec<f64> = (0..g.ny()).map(|j| spec.beta.eval(g.y.at(j))).collect::<Result<_, _>>()?;
    let mut phase = vec![0.0; g.len()];
    let i0 = g.x.origin();
    for j in 0..g.ny() {
        let arg = |i: usize| frame.a0[g.idx(i, j)].arg();
        phase[g.idx(i0, j)] = arg(i0);
        for i in i0 + 1..g.nx() {
            phase[g.idx(i, j)] = phase[g.idx(i - 1, j)] + wrap_pi(arg(i) - arg(i - 1));
        }
        for i in (0..i0).rev() {
            phase[g.idx(i, j)] = phase[g.idx(i + 1, j)] + wrap_pi(arg(i) - arg(i + 1));
        }
    }
    let phi_hat = (0..g.len())
        .map(|k| {
            let (_, j) = g.ij(k);
            beta[j] - 2.0 * phase[k]
        })
        .collect();
    let r = (0..g.len())
        .map(|k| {
            let (i, _) = g.ij(k);
            -2.0 * (frame.b1[k] * C64::from_polar(1.0, alpha[i])).re
        })
        .collect();
    Ok(ConnectionField {
        grid: g,
        alpha,
        beta,
        phi_hat,
        r,
    })
}

/// Finite-difference cross-check of the connection shape.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ShapeReport {
    /// Largest coefficient of `Û⁻¹Û_x`, `Û⁻¹Û_y` outside the expected degrees.
    pub off_shape: f64,
    /// Largest deviation of the differenced forms from the algebraic ones.
    pub form_deviation: f64,
}

/// Differences `Û` on the grid and compares `Û⁻¹dÛ` with the extracted forms
/// on degrees `−3..3`. Nodes listed in `mask` as `false` are skipped.
pub fn connection_shape_fd(frame: &FrameField, conn: &ConnectionField, order: usize, mask: Option<&[bool]>) -> ShapeReport {
    let u = frame.u_field();
    let ux = partial(&u, Dir::X, 1, order, &[]);
    let uy = partial(&u, Dir::Y, 1, order, &[]);
    let w = DegreeWindow::new(-3, 3).expect("small window");
    let g = frame.grid;
    (0..g.len())
        .into_par_iter()
        .filter(|k| mask.is_none_or(|m| m[*k]))
        .map(|k| {
            let (i, j) = g.ij(k);
            let inv = frame.u_hat[k].adjugate();
            let o1 = inv.mul(&ux.data[k], w);
            let o2 = inv.mul(&uy.data[k], w);
            let (w10, w11) = conn.omega1(i, j);
            let w2 = conn.omega2(i, j);
            let mut off = 0.0_f64;
            let mut dev = 0.0_f64;
            for d in -3..=3 {
                let (e1, e2) = match d {
                    0 => (w10, Mat2::zeros()),
                    1 => (w11, Mat2::zeros()),
                    -1 => (Mat2::zeros(), w2),
                    _ => (Mat2::zeros(), Mat2::zeros()),
                };
                let r1 = mat_norm(&(o1.coeff(d) - e1));
                let r2 = mat_norm(&(o2.coeff(d) - e2));
                if matches!(d, -1..=1) {
                    dev = dev.max(r1).max(r2);
                } else {
                    off = off.max(r1).max(r2);
                }
            }
            ShapeReport {
                off_shape: off,
                form_deviation: dev,
            }
        })
        .reduce(ShapeReport::default, |a, b| ShapeReport {
            off_shape: a.off_shape.max(b.off_shape),
            form_deviation: a.form_deviation.max(b.form_deviation),
        })
}

/// Zero-curvature residuals of the connection.
#[derive(Clone, Debug, Serialize)]
pub struct ZccReport {
    /// `‖ω̂₁_y − ω̂₂_x + [ω̂₂, ω̂₁]‖` per node (coefficient max norm).
    pub residual: Field<f64>,
    /// `φ̂_xy − sin(φ̂ + α)` per node.
    pub sine_gordon: Field<f64>,
    /// `r + φ̂_x` per node.
    pub r_identity: Field<f64>,
}

fn max_over(f: &Field<f64>, mask: Option<&[bool]>) -> f64 {
    f.data
        .iter()
        .enumerate()
        .filter(|(k, _)| mask.is_none_or(|m| m[*k]))
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max)
}

impl ZccReport {
    pub fn max(&self, mask: Option<&[bool]>) -> f64 {
        max_over(&self.residual, mask)
    }

    pub fn max_sine_gordon(&self, mask: Option<&[bool]>) -> f64 {
        max_over(&self.sine_gordon, mask)
    }

    pub fn max_r_identity(&self, mask: Option<&[bool]>) -> f64 {
        max_over(&self.r_identity, mask)
    }
}

/// Evaluates the zero-curvature condition with finite differences of
/// accuracy `order` for `r_y` and `φ̂_x`, coefficient by coefficient.
pub fn zcc_residual(conn: &ConnectionField, order: usize) -> ZccReport {
    let g = conn.grid;
    let phi = Field {
        grid: g,
        data: conn.phi_hat.clone(),
    };
    let r = Field {
        grid: g,
        data: conn.r.clone(),
    };
    let phi_x = partial(&phi, Dir::X, 1, order, &[]);
    let phi_xy = partial(&phi_x, Dir::Y, 1, order, &[]);
    let r_y = partial(&r, Dir::Y, 1, order, &[]);
    let residual = Field::from_fn(g, |i, j| {
        let k = g.idx(i, j);
        let (w10, w11) = conn.omega1(i, j);
        let w2 = conn.omega2(i, j);
        // ω̂₁_y lives in degree 0 (α does not depend on y).
        let w1y = Mat2::new(I2 * r_y.data[k], C64::new(0.0, 0.0), C64::new(0.0, 0.0), -I2 * r_y.data[k]);
        // ω̂₂_x lives in degree −1.
        let p = conn.phi_hat[k];
        let px = phi_x.data[k];
        let z = C64::new(0.0, 0.0);
        let w2x = Mat2::new(
            z,
            -I2 * C64::new(0.0, px) * C64::from_polar(1.0, p),
            -I2 * C64::new(0.0, -px) * C64::from_polar(1.0, -p),
            z,
        );
        let deg0 = w1y + (w2 * w11 - w11 * w2);
        let deg_m1 = -w2x + (w2 * w10 - w10 * w2);
        mat_norm(&deg0).max(mat_norm(&deg_m1))
    });
    let sine_gordon = Field::from_fn(g, |i, j| *phi_xy.at(i, j) - conn.angle(i, j).sin());
    let r_identity = Field::from_fn(g, |i, j| *r.at(i, j) + *phi_x.at(i, j));
    ZccReport {
        residual,
        sine_gordon,
        r_identity,
    }
}

/// `‖∂_y(Ûω̂₁) − ∂_x(Ûω̂₂)‖` per node at `λ₀`, using analytic first
/// derivatives `Û_x = Ûω̂₁`, `Û_y = Ûω̂₂` and one finite difference each.
pub fn mixed_partial_residual(frame: &FrameField, conn: &ConnectionField, lambda: f64, order: usize) -> Field<f64> {
    let g = frame.grid;
    let lam = C64::new(lambda, 0.0);
    let ux = Field::from_fn(g, |i, j| {
        let (w10, w11) = conn.omega1(i, j);
        frame.at(i, j).eval(lambda) * (w10 + w11 * lam)
    });
    let uy = Field::from_fn(g, |i, j| frame.at(i, j).eval(lambda) * conn.omega2(i, j) / lam);
    let uxy = partial(&ux, Dir::Y, 1, order, &[]);
    let uyx = partial(&uy, Dir::X, 1, order, &[]);
    Field::from_fn(g, |i, j| mat_norm(&(uxy.at(i, j) - uyx.at(i, j))))
}
