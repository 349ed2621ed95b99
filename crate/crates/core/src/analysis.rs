//! Geometry of sampled surfaces: fundamental forms, the oriented angle,
//! sine-Gordon and harmonicity residuals, asymptotic torsion, frames,
//! front-from-normal integration, normal signs and boundary angles.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::Serialize;

use crate::diff::{derivative_line, partial, Dir, Stencil};
use crate::grid::{Field, Grid2};
use crate::potentials::PotentialSpec;
use crate::quad::{accumulate, cell_increments};
use crate::sym::{SurfaceGrid, Vec3};

/// Default finite-difference accuracy order. At step 1/32 the fourth-order
/// one-sided edge stencils leave second-form residuals near 2e-5.
pub const DEFAULT_ORDER: usize = 6;
/// Accuracy order of the third derivatives behind the torsion estimate.
pub const TORSION_ORDER: usize = 4;
/// Curve curvature below which the Frenet torsion is not asserted: it is
/// undefined at inflection points and the estimate degrades like `1/κ²`.
pub const TORSION_MIN_KAPPA: f64 = 1e-2;
/// Nodes with `EG − F²` at or below this are marked non-regular.
pub const REGULARITY_THRESHOLD: f64 = 1e-10;
/// `|sin ω|` cut for curvature and sign assertions.
pub const SIN_CUT: f64 = 0.1;

/// Shortest run of nodes between break lines that still fits every stencil.
pub const MIN_PIECE: usize = 10;

/// Node indices that finite-difference stencils must not straddle.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Breaks {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
}

impl Breaks {
    pub fn none() -> Self {
        Self::default()
    }

    /// Kinks of `α` cut the `x` axis, kinks of `β` the `y` axis. Kinks
    /// closer than [`MIN_PIECE`] nodes leave no room for a one-sided stencil;
    /// the axis is then left uncut and a warning is logged.
    pub fn from_spec(spec: &PotentialSpec, grid: &Grid2) -> Self {
        let cut = |kinks: &[f64], axis: &crate::grid::Axis, name: &str| {
            let mut v: Vec<usize> = kinks
                .iter()
                .filter(|&&k| k > axis.lo() && k < axis.hi())
                .map(|&k| axis.nearest(k))
                .collect();
            v.sort_unstable();
            v.dedup();
            let mut ends = vec![0];
            ends.extend(&v);
            ends.push(axis.len() - 1);
            if ends.windows(2).any(|w| w[1] - w[0] + 1 < MIN_PIECE) {
                log::warn!("kinks of {name} are closer than {MIN_PIECE} grid nodes; differencing across them");
                return Vec::new();
            }
            v
        };
        Self {
            x: cut(spec.alpha.kinks(), &grid.x, "alpha"),
            y: cut(spec.beta.kinks(), &grid.y, "beta"),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty() && self.y.is_empty()
    }
}

fn field<T: Clone>(grid: Grid2, data: Vec<T>) -> Field<T> {
    Field { grid, data }
}

/// First partials of a vector field by finite differences.
pub fn fd_partials(v: &Field<Vec3>, order: usize, breaks: &Breaks) -> (Vec<Vec3>, Vec<Vec3>) {
    let dx = partial(v, Dir::X, 1, order, &breaks.x).data;
    let dy = partial(v, Dir::Y, 1, order, &breaks.y).data;
    (dx, dy)
}

/// Mixed partial `∂_x∂_y` by finite differences.
pub fn fd_mixed<T: crate::diff::Linear>(v: &Field<T>, order: usize, breaks: &Breaks) -> Field<T> {
    let dx = partial(v, Dir::X, 1, order, &breaks.x);
    partial(&dx, Dir::Y, 1, order, &breaks.y)
}

/// First and second fundamental forms and Gauss curvature per node.
#[derive(Clone, Debug, Serialize)]
pub struct Forms {
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub l: Vec<f64>,
    pub m: Vec<f64>,
    pub n: Vec<f64>,
    /// `NaN` at non-regular nodes.
    pub k: Vec<f64>,
    pub regular: Vec<bool>,
}

/// `E, F, G` from the tangents; `ℓ = −⟨f_x,N_x⟩`, `m = −⟨f_x,N_y⟩`,
/// `n = −⟨f_y,N_y⟩`; `K = (ℓn − m²)/(EG − F²)`.
pub fn fundamental_forms(fx: &[Vec3], fy: &[Vec3], nx: &[Vec3], ny: &[Vec3], threshold: f64) -> Forms {
    let len = fx.len();
    let mut out = Forms {
        e: Vec::with_capacity(len),
        f: Vec::with_capacity(len),
        g: Vec::with_capacity(len),
        l: Vec::with_capacity(len),
        m: Vec::with_capacity(len),
        n: Vec::with_capacity(len),
        k: Vec::with_capacity(len),
        regular: Vec::with_capacity(len),
    };
    for k in 0..len {
        let (a, b) = (fx[k], fy[k]);
        let (e, f, g) = (a.dot(&a), a.dot(&b), b.dot(&b));
        let (l, m, n) = (-a.dot(&nx[k]), -a.dot(&ny[k]), -b.dot(&ny[k]));
        let det = e * g - f * f;
        let regular = det > threshold;
        out.e.push(e);
        out.f.push(f);
        out.g.push(g);
        out.l.push(l);
        out.m.push(m);
        out.n.push(n);
        out.k.push(if regular { (l * n - m * m) / det } else { f64::NAN });
        out.regular.push(regular);
    }
    out
}

/// Continuous branch of the oriented angle from `f_x` to `f_y`.
#[derive(Clone, Debug, Serialize)]
pub struct AngleField {
    pub omega: Field<f64>,
    /// Nodes where `f_x` or `f_y` vanishes.
    pub singular: Vec<bool>,
    /// `sin ω(0,0) = 0`: the orientation of the branch is not determined.
    pub origin_ambiguous: bool,
}

/// Unwrap per-node angles: first along the `y`-axis from the origin, then
/// along each row outward from the `y`-axis. `ω(0,0)` is put in `[0, 2π)`.
pub fn unwrap_angles(raw: &Field<f64>) -> Field<f64> {
    let grid = raw.grid;
    let (i0, j0) = grid.origin();
    let (nx, ny) = (grid.nx(), grid.ny());
    let step = |prev: f64, w: f64| prev + wrap(w - prev);
    let mut origin = raw.at(i0, j0).rem_euclid(2.0 * PI);
    if 2.0 * PI - origin < 1e-12 {
        origin = 0.0;
    }
    let mut axis = vec![0.0; ny];
    axis[j0] = origin;
    for j in j0 + 1..ny {
        axis[j] = step(axis[j - 1], *raw.at(i0, j));
    }
    for j in (0..j0).rev() {
        axis[j] = step(axis[j + 1], *raw.at(i0, j));
    }
    let rows: Vec<Vec<f64>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let mut row = vec![0.0; nx];
            row[i0] = axis[j];
            for i in i0 + 1..nx {
                row[i] = step(row[i - 1], *raw.at(i, j));
            }
            for i in (0..i0).rev() {
                row[i] = step(row[i + 1], *raw.at(i, j));
            }
            row
        })
        .collect();
    Field::from_fn(grid, |i, j| rows[j][i])
}

/// Representative of `a` in `(−π, π]`.
pub fn wrap(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI { PI } else { r }
}

/// `ω = atan2(⟨f_y, N×f_x⟩, ⟨f_y, f_x⟩)` per node, unwrapped.
pub fn angle_field(surface: &SurfaceGrid, fx: &[Vec3], fy: &[Vec3]) -> AngleField {
    let grid = surface.grid;
    let mut singular = vec![false; grid.len()];
    let raw: Vec<f64> = (0..grid.len())
        .map(|k| {
            let (a, b) = (fx[k], fy[k]);
            if a.norm() < 1e-12 || b.norm() < 1e-12 {
                singular[k] = true;
                return 0.0;
            }
            let perp = surface.n[k].cross(&a);
            b.dot(&perp).atan2(b.dot(&a))
        })
        .collect();
    let omega = unwrap_angles(&field(grid, raw));
    let (i0, j0) = grid.origin();
    let origin_ambiguous = omega.at(i0, j0).sin().abs() < 1e-9;
    AngleField { omega, singular, origin_ambiguous }
}

/// `ω_xy − sin ω` by finite differences.
pub fn sine_gordon_residual(omega: &Field<f64>, order: usize, breaks: &Breaks) -> Field<f64> {
    let wxy = fd_mixed(omega, order, breaks);
    field(omega.grid, wxy.data.iter().zip(&omega.data).map(|(d, w)| d - w.sin()).collect())
}

/// `‖N_xy − cos ω·N‖` and the factor `h = ⟨N_xy, N⟩`.
pub fn harmonicity_residual(n: &Field<Vec3>, omega: &Field<f64>, order: usize, breaks: &Breaks) -> (Field<f64>, Field<f64>) {
    let nxy = fd_mixed(n, order, breaks);
    let res = (0..n.data.len())
        .map(|k| (nxy.data[k] - n.data[k] * omega.data[k].cos()).norm())
        .collect();
    let h = (0..n.data.len()).map(|k| nxy.data[k].dot(&n.data[k])).collect();
    (field(n.grid, res), field(n.grid, h))
}

/// Frenet torsion of one coordinate curve at one node.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TorsionSample {
    pub i: usize,
    pub j: usize,
    pub tau: f64,
    /// Curvature `‖c′×c″‖/‖c′‖³` of the sampled curve.
    pub kappa: f64,
}

/// `τ = det(c′, c″, c‴)/‖c′×c″‖²` along the `x`- or `y`-curves of `f`,
/// skipping nodes with `‖c′×c″‖ < min_curvature`.
pub fn asymptotic_torsion(surface: &SurfaceGrid, dir: Dir, order: usize, breaks: &Breaks, min_curvature: f64) -> Vec<TorsionSample> {
    let grid = surface.grid;
    let (nx, ny) = (grid.nx(), grid.ny());
    let (lines, len, h, cuts) = match dir {
        Dir::X => (ny, nx, grid.x.step(), &breaks.x),
        Dir::Y => (nx, ny, grid.y.step(), &breaks.y),
    };
    let st: Vec<Stencil> = (1..=3).map(|m| Stencil::with_breaks(m, order, len, cuts)).collect();
    (0..lines)
        .into_par_iter()
        .flat_map_iter(|line| {
            let c: Vec<Vec3> = (0..len)
                .map(|t| match dir {
                    Dir::X => surface.f_at(t, line),
                    Dir::Y => surface.f_at(line, t),
                })
                .collect();
            let d: Vec<Vec<Vec3>> = st.iter().map(|s| derivative_line(&c, h, s)).collect();
            (0..len)
                .filter_map(|t| {
                    let b = d[0][t].cross(&d[1][t]);
                    let bn = b.norm();
                    if bn < min_curvature {
                        return None;
                    }
                    let (i, j) = match dir {
                        Dir::X => (t, line),
                        Dir::Y => (line, t),
                    };
                    let speed = d[0][t].norm();
                    Some(TorsionSample { i, j, tau: b.dot(&d[2][t]) / (bn * bn), kappa: bn / speed.powi(3) })
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Frames built from `f_x`, `N` and `ω` at each node.
#[derive(Clone, Debug, Serialize)]
pub struct FrameReport {
    /// `f_x/‖f_x‖`.
    pub t: Vec<Vec3>,
    /// `N × t`.
    pub fx_perp: Vec<Vec3>,
    pub e1: Vec<Vec3>,
    pub e2: Vec<Vec3>,
    /// `ω/2`.
    pub theta: Vec<f64>,
    /// `det(t, f_x⊥, N)`.
    pub det_tangent: Vec<f64>,
    /// `det(e₁, e₂, N)`.
    pub det_e: Vec<f64>,
}

impl FrameReport {
    /// Largest `|det − 1|` over both frames.
    pub fn max_det_defect(&self) -> f64 {
        self.det_tangent
            .iter()
            .chain(&self.det_e)
            .map(|d| (d - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `e₁ = cos θ·t + sin θ·f_x⊥`, `e₂ = −sin θ·t + cos θ·f_x⊥` with `θ = ω/2`.
pub fn frames(surface: &SurfaceGrid, fx: &[Vec3], omega: &Field<f64>) -> FrameReport {
    let len = fx.len();
    let mut r = FrameReport {
        t: Vec::with_capacity(len),
        fx_perp: Vec::with_capacity(len),
        e1: Vec::with_capacity(len),
        e2: Vec::with_capacity(len),
        theta: Vec::with_capacity(len),
        det_tangent: Vec::with_capacity(len),
        det_e: Vec::with_capacity(len),
    };
    for k in 0..len {
        let n = surface.n[k];
        let t = fx[k].normalize();
        let perp = n.cross(&t);
        let theta = 0.5 * omega.data[k];
        let (s, c) = theta.sin_cos();
        let e1 = t * c + perp * s;
        let e2 = -t * s + perp * c;
        r.det_tangent.push(Matrix3::from_columns(&[t, perp, n]).determinant());
        r.det_e.push(Matrix3::from_columns(&[e1, e2, n]).determinant());
        r.t.push(t);
        r.fx_perp.push(perp);
        r.e1.push(e1);
        r.e2.push(e2);
        r.theta.push(theta);
    }
    r
}

/// Cell integrals along a line, never crossing a break node.
fn piecewise_increments(line: &[Vec3], h: f64, breaks: &[usize]) -> Vec<Vec3> {
    let n = line.len();
    let mut cuts: Vec<usize> = breaks.iter().copied().filter(|&b| b > 0 && b + 1 < n).collect();
    cuts.sort_unstable();
    cuts.dedup();
    cuts.push(n - 1);
    let mut out = Vec::with_capacity(n - 1);
    let mut start = 0;
    for b in cuts {
        out.extend(cell_increments(&line[start..=b], h));
        start = b;
    }
    out
}

/// Immersion recovered from its normal.
#[derive(Clone, Debug, Serialize)]
pub struct FrontReport {
    pub f: Vec<Vec3>,
    /// Loop integral of `f_x dx + f_y dy` around each cell, `(nx−1)(ny−1)` values, cell `(i, j)` at `i·(ny−1) + j`.
    pub closure: Vec<f64>,
    pub max_closure: f64,
}

/// Integrate `f_x = N×N_x`, `f_y = −N×N_y` from the origin: along the
/// `x`-axis first, then along each column.
pub fn front_from_normal(n: &Field<Vec3>, order: usize, breaks: &Breaks) -> FrontReport {
    let grid = n.grid;
    let (nx, ny) = (grid.nx(), grid.ny());
    let (i0, j0) = grid.origin();
    let (dnx, dny) = fd_partials(n, order, breaks);
    let p: Vec<Vec3> = (0..grid.len()).map(|k| n.data[k].cross(&dnx[k])).collect();
    let q: Vec<Vec3> = (0..grid.len()).map(|k| -n.data[k].cross(&dny[k])).collect();
    // Cell increments of p along every row, of q along every column.
    let px: Vec<Vec<Vec3>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let line: Vec<Vec3> = (0..nx).map(|i| p[grid.idx(i, j)]).collect();
            piecewise_increments(&line, grid.x.step(), &breaks.x)
        })
        .collect();
    let qy: Vec<Vec<Vec3>> = (0..nx)
        .into_par_iter()
        .map(|i| piecewise_increments(&q[i * ny..(i + 1) * ny], grid.y.step(), &breaks.y))
        .collect();
    let zero = Vec3::zeros();
    let axis = accumulate(&px[j0], i0, &zero);
    let cols: Vec<Vec<Vec3>> = (0..nx)
        .into_par_iter()
        .map(|i| accumulate(&qy[i], j0, &zero).into_iter().map(|v| v + axis[i]).collect())
        .collect();
    let f = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            cols[i][j]
        })
        .collect();
    let closure: Vec<f64> = (0..nx - 1)
        .flat_map(|i| (0..ny - 1).map(move |j| (i, j)))
        .map(|(i, j)| (px[j][i] + qy[i + 1][j] - px[j + 1][i] - qy[i][j]).norm())
        .collect();
    let max_closure = closure.iter().copied().fold(0.0, f64::max);
    if max_closure > 1e-6 {
        log::warn!("front integration: cell closure residual {max_closure:.3e}, normal field may not be integrable");
    }
    FrontReport { f, closure, max_closure }
}

/// Comparison of `(f_x×f_y)/‖f_x×f_y‖` with `sign(sin ω)·N`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SignReport {
    pub checked: usize,
    /// Nodes with `sin ω > 0` where the normals agree.
    pub agree: usize,
    /// Nodes with `sin ω < 0` where the normals are opposite.
    pub opposite: usize,
    /// Nodes inconsistent with `N_standard = sign(sin ω)·N`.
    pub violations: usize,
    pub max_deviation: f64,
}

pub fn normal_sign_comparison(fx: &[Vec3], fy: &[Vec3], n: &[Vec3], omega: &Field<f64>, min_sin: f64, tol: f64) -> SignReport {
    let mut r = SignReport::default();
    for k in 0..fx.len() {
        let s = omega.data[k].sin();
        if s.abs() <= min_sin {
            continue;
        }
        let c = fx[k].cross(&fy[k]);
        let standard = c / c.norm();
        let dev = (standard - n[k] * s.signum()).norm();
        r.checked += 1;
        r.max_deviation = r.max_deviation.max(dev);
        if dev > tol {
            r.violations += 1;
        } else if s > 0.0 {
            r.agree += 1;
        } else {
            r.opposite += 1;
        }
    }
    r
}

/// Boundary angles read off an unwrapped `ω`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryAngles {
    pub x: Vec<f64>,
    /// `ω(x,0) − ω(0,0)`.
    pub alpha: Vec<f64>,
    pub y: Vec<f64>,
    /// `ω(0,y)`.
    pub beta: Vec<f64>,
}

pub fn recover_boundary_angles(omega: &Field<f64>) -> BoundaryAngles {
    let grid = omega.grid;
    let (i0, j0) = grid.origin();
    let w00 = *omega.at(i0, j0);
    BoundaryAngles {
        x: grid.x.nodes(),
        alpha: (0..grid.nx()).map(|i| omega.at(i, j0) - w00).collect(),
        y: grid.y.nodes(),
        beta: (0..grid.ny()).map(|j| *omega.at(i0, j)).collect(),
    }
}

/// `|sin ω| > cut` per node.
pub fn sin_mask(omega: &Field<f64>, cut: f64) -> Vec<bool> {
    omega.data.iter().map(|w| w.sin().abs() > cut).collect()
}

/// Max and mean of `|v|` over the finite entries selected by `mask`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stat {
    pub name: String,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(name: &str, values: impl IntoIterator<Item = f64>) -> Self {
        let (mut max, mut sum, mut count) = (0.0f64, 0.0, 0);
        for v in values.into_iter().filter(|v| v.is_finite()) {
            max = max.max(v.abs());
            sum += v.abs();
            count += 1;
        }
        let mean = if count > 0 { sum / count as f64 } else { 0.0 };
        Self { name: name.to_string(), max, mean, count }
    }

    fn masked(name: &str, values: &[f64], mask: &[bool]) -> Self {
        Self::of(name, values.iter().zip(mask).filter(|(_, m)| **m).map(|(v, _)| *v))
    }
}

/// Where the second-form normal derivatives come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalDerivatives {
    FiniteDifference,
    Analytic,
}

#[derive(Clone, Debug)]
pub struct GeometryOptions {
    pub order: usize,
    pub breaks: Breaks,
    pub regularity_threshold: f64,
    pub sin_cut: f64,
    pub torsion: bool,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        Self {
            order: DEFAULT_ORDER,
            breaks: Breaks::none(),
            regularity_threshold: REGULARITY_THRESHOLD,
            sin_cut: SIN_CUT,
            torsion: true,
        }
    }
}

/// Per-node geometry of a surface with residual fields and summaries.
#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    pub lambda: f64,
    pub grid: Grid2,
    pub normal_derivatives: NormalDerivatives,
    pub forms: Forms,
    pub omega: Field<f64>,
    pub origin_ambiguous: bool,
    pub h_harm: Vec<f64>,
    pub sine_gordon: Vec<f64>,
    pub harmonicity: Vec<f64>,
    /// `‖f_x×f_y − ‖f_x‖‖f_y‖ sin ω·N‖`.
    pub cross: Vec<f64>,
    pub torsion: Vec<TorsionSample>,
    pub summary: Vec<Stat>,
}

impl GeometryReport {
    pub fn stat(&self, name: &str) -> Option<&Stat> {
        self.summary.iter().find(|s| s.name == name)
    }

    /// Nodes where `|sin ω|` exceeds the curvature cut and the forms are regular.
    pub fn regular_count(&self) -> usize {
        self.summary_mask().iter().filter(|m| **m).count()
    }

    fn summary_mask(&self) -> Vec<bool> {
        let cut = sin_mask(&self.omega, SIN_CUT);
        cut.iter().zip(&self.forms.regular).map(|(a, b)| *a && *b).collect()
    }
}

/// Full geometry report. `normals` supplies `(N_x, N_y)`; without it they are
/// taken by finite differences of `N`.
pub fn geometry_report(
    surface: &SurfaceGrid,
    fx: &[Vec3],
    fy: &[Vec3],
    normals: Option<(&[Vec3], &[Vec3])>,
    opts: &GeometryOptions,
) -> GeometryReport {
    let grid = surface.grid;
    let nf = surface.n_field();
    let fd;
    let (nx, ny, source) = match normals {
        Some((a, b)) => (a, b, NormalDerivatives::Analytic),
        None => {
            fd = fd_partials(&nf, opts.order, &opts.breaks);
            (&fd.0[..], &fd.1[..], NormalDerivatives::FiniteDifference)
        }
    };
    let forms = fundamental_forms(fx, fy, nx, ny, opts.regularity_threshold);
    let angle = angle_field(surface, fx, fy);
    let omega = angle.omega;
    let sg = sine_gordon_residual(&omega, opts.order, &opts.breaks).data;
    let (harm, h) = harmonicity_residual(&nf, &omega, opts.order, &opts.breaks);
    let cross: Vec<f64> = (0..grid.len())
        .map(|k| (fx[k].cross(&fy[k]) - surface.n[k] * (fx[k].norm() * fy[k].norm() * omega.data[k].sin())).norm())
        .collect();
    let torsion = if opts.torsion {
        asymptotic_torsion(surface, Dir::X, TORSION_ORDER, &opts.breaks, 1e-6)
    } else {
        Vec::new()
    };
    let lam = surface.lambda;
    let mask = sin_mask(&omega, opts.sin_cut);
    let regular: Vec<bool> = mask.iter().zip(&forms.regular).map(|(a, b)| *a && *b).collect();
    let all = vec![true; grid.len()];
    let diff = |a: &[f64], b: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..a.len()).map(|k| a[k] - b(k)).collect() };
    let sin = |k: usize| omega.data[k].sin();
    let cos = |k: usize| omega.data[k].cos();
    let summary = vec![
        Stat::masked("E-lambda^2", &diff(&forms.e, &|_| lam * lam), &all),
        Stat::masked("G-lambda^-2", &diff(&forms.g, &|_| 1.0 / (lam * lam)), &all),
        Stat::masked("F-cos", &diff(&forms.f, &cos), &all),
        Stat::masked("l", &forms.l, &all),
        Stat::masked("n", &forms.n, &all),
        Stat::masked("m-sin", &diff(&forms.m, &sin), &all),
        Stat::masked("K+1", &forms.k.iter().map(|k| k + 1.0).collect::<Vec<_>>(), &regular),
        Stat::masked("sine-gordon", &sg, &all),
        Stat::masked("harmonicity", &harm.data, &all),
        Stat::masked("h-cos", &diff(&h.data, &cos), &all),
        Stat::masked("cross", &cross, &all),
        Stat::of(
            "torsion",
            torsion
                .iter()
                .filter(|s| omega.at(s.i, s.j).sin().abs() > 0.3)
                .map(|s| s.tau.abs() - 1.0),
        ),
    ];
    GeometryReport {
        lambda: lam,
        grid,
        normal_derivatives: source,
        forms,
        omega,
        origin_ambiguous: angle.origin_ambiguous,
        h_harm: h.data,
        sine_gordon: sg,
        harmonicity: harm.data,
        cross,
        torsion,
        summary,
    }
}
