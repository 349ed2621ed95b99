//! Coordinate changes: arclength (Chebyshev) normalization of the asymptotic
//! coordinates and local graph patches over the tangent plane.

use nalgebra::{Matrix2, Matrix3, Vector2};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::diff::{partial, Dir};
use crate::grid::{Axis, Field, Grid2, GridError};
use crate::interp::{bicubic, cubic};
use crate::quad::cumulative;
use crate::sym::{RigidMotion, SurfaceGrid, Vec3};

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReparamError {
    #[error("not a pseudo-spherical front: {which} varies by {variation:.3e} across the other coordinate")]
    NotAPsFront { which: &'static str, variation: f64 },
    #[error("arclength is not strictly increasing near {at}")]
    NotMonotone { at: f64 },
    #[error("patch too large or degenerate: {0}")]
    PatchSize(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Monotone sampled map `x ↦ s(x)` with `s(0) = 0`, and the uniform axis in `s`.
#[derive(Clone, Debug, Serialize)]
pub struct ReparamMap1D {
    pub old: Axis,
    /// `s` at the nodes of `old`.
    pub s: Vec<f64>,
    pub new: Axis,
    /// `s⁻¹` at the nodes of `new`.
    pub inverse: Vec<f64>,
}

impl ReparamMap1D {
    /// Arclength `s(x) = ∫₀ˣ √E` from samples of `√E` on `old`.
    fn from_speed(old: Axis, speed: &[f64]) -> Result<Self, ReparamError> {
        let s = cumulative(speed, old.step(), old.origin(), &0.0);
        if let Some(k) = (1..s.len()).find(|&k| s[k] <= s[k - 1]) {
            return Err(ReparamError::NotMonotone { at: old.at(k) });
        }
        let (n, o) = (old.len(), old.origin());
        let mut step = f64::INFINITY;
        if o + 1 < n {
            step = step.min(s[n - 1] / (n - 1 - o) as f64);
        }
        if o > 0 {
            step = step.min(-s[0] / o as f64);
        }
        let new = Axis::from_step(step, n, o)?;
        let mut map = Self { old, s, new, inverse: Vec::new() };
        map.inverse = (0..n).map(|k| map.invert(map.new.at(k))).collect();
        Ok(map)
    }

    /// `s(x)` and `s′(x)` from the cubic interpolant.
    pub fn forward(&self, x: f64) -> Option<(f64, f64)> {
        cubic(&self.s, &self.old, x)
    }

    /// `x` with `s(x) = target`: bracketing cell, then safeguarded Newton.
    pub fn invert(&self, target: f64) -> f64 {
        let n = self.s.len();
        let k = self.s.partition_point(|v| *v < target).clamp(1, n - 1);
        let (mut a, mut b) = (self.old.at(k - 1), self.old.at(k));
        let (sa, sb) = (self.s[k - 1], self.s[k]);
        if target <= sa {
            return a;
        }
        if target >= sb {
            return b;
        }
        let mut x = a + (b - a) * (target - sa) / (sb - sa);
        for _ in 0..60 {
            let (v, d) = self.forward(x).expect("inside axis");
            let r = v - target;
            if r.abs() <= 1e-15 * (1.0 + target.abs()) {
                break;
            }
            if r > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let nx = x - r / d;
            x = if d > 0.0 && nx > a && nx < b { nx } else { 0.5 * (a + b) };
        }
        x
    }

    /// Largest `|s(x) − x|` over the old nodes.
    pub fn identity_defect(&self) -> f64 {
        self.s
            .iter()
            .enumerate()
            .map(|(k, v)| (v - self.old.at(k)).abs())
            .fold(0.0, f64::max)
    }
}

/// Surface resampled on arclength coordinates `(s, t)`.
#[derive(Clone, Debug, Serialize)]
pub struct Chebyshev {
    pub surface: SurfaceGrid,
    /// `f_s`, `f_t` by the chain rule from the interpolated tangents.
    pub fs: Vec<Vec3>,
    pub ft: Vec<Vec3>,
    pub s: ReparamMap1D,
    pub t: ReparamMap1D,
    /// Largest spread of `E` along a column and of `G` along a row.
    pub e_variation: f64,
    pub g_variation: f64,
}

/// Resample onto `s(x) = ∫₀ˣ √E`, `t(y) = ∫₀ʸ √G` so that `E = G = 1`.
/// `E` must not depend on `y` nor `G` on `x` beyond `tol`.
pub fn chebyshev_normalize(surface: &SurfaceGrid, fx: &[Vec3], fy: &[Vec3], tol: f64) -> Result<Chebyshev, ReparamError> {
    let grid = surface.grid;
    let (nx, ny) = (grid.nx(), grid.ny());
    let (i0, j0) = grid.origin();
    let e = Field { grid, data: fx.iter().map(|v| v.norm_squared()).collect::<Vec<_>>() };
    let g = Field { grid, data: fy.iter().map(|v| v.norm_squared()).collect::<Vec<_>>() };
    let spread = |vals: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        hi - lo
    };
    let e_variation = (0..nx).map(|i| spread(&mut (0..ny).map(|j| *e.at(i, j)))).fold(0.0, f64::max);
    let g_variation = (0..ny).map(|j| spread(&mut (0..nx).map(|i| *g.at(i, j)))).fold(0.0, f64::max);
    if !(e_variation <= tol) {
        return Err(ReparamError::NotAPsFront { which: "E", variation: e_variation });
    }
    if !(g_variation <= tol) {
        return Err(ReparamError::NotAPsFront { which: "G", variation: g_variation });
    }
    let sx: Vec<f64> = (0..nx).map(|i| e.at(i, j0).sqrt()).collect();
    let sy: Vec<f64> = (0..ny).map(|j| g.at(i0, j).sqrt()).collect();
    let smap = ReparamMap1D::from_speed(grid.x, &sx)?;
    let tmap = ReparamMap1D::from_speed(grid.y, &sy)?;
    let new_grid = Grid2::new(smap.new, tmap.new);
    let ff = surface.f_field();
    let nf = surface.n_field();
    let fxf = Field { grid, data: fx.to_vec() };
    let fyf = Field { grid, data: fy.to_vec() };
    let out: Vec<[Vec3; 4]> = (0..new_grid.len())
        .into_par_iter()
        .map(|k| {
            let (a, b) = new_grid.ij(k);
            let (x, y) = (smap.inverse[a], tmap.inverse[b]);
            let f = bicubic(&ff, x, y).expect("inside grid").value;
            let n = bicubic(&nf, x, y).expect("inside grid").value.normalize();
            let dsdx = smap.forward(x).expect("inside axis").1;
            let dtdy = tmap.forward(y).expect("inside axis").1;
            let fs = bicubic(&fxf, x, y).expect("inside grid").value / dsdx;
            let ft = bicubic(&fyf, x, y).expect("inside grid").value / dtdy;
            [f, n, fs, ft]
        })
        .collect();
    Ok(Chebyshev {
        surface: SurfaceGrid {
            lambda: surface.lambda,
            grid: new_grid,
            f: out.iter().map(|v| v[0]).collect(),
            n: out.iter().map(|v| v[1]).collect(),
        },
        fs: out.iter().map(|v| v[2]).collect(),
        ft: out.iter().map(|v| v[3]).collect(),
        s: smap,
        t: tmap,
        e_variation,
        g_variation,
    })
}

/// Height function over the tangent plane at a surface node.
#[derive(Clone, Debug, Serialize)]
pub struct GraphPatch {
    pub center: (usize, usize),
    pub center_xy: (f64, f64),
    /// Radius of the parameter disk around the center.
    pub radius: f64,
    /// `p ↦ R p + t` with `R·N(center) = ê₃` and `f(center) ↦ 0`.
    pub motion: RigidMotion,
    /// Height `h(u, v)`.
    pub h: Field<f64>,
    /// `(x, y)` with `(u, v, h) = R f(x, y) + t`.
    pub preimage: Vec<Option<(f64, f64)>>,
    /// Half-width of the `(u, v)` square.
    pub half_width: f64,
    /// `(h_uu h_vv − h_uv²)/(1 + h_u² + h_v²)²`.
    pub monge_k: Vec<f64>,
    /// Angle between `N̂ = (−h_u, −h_v, 1)/√(1+h_u²+h_v²)` and `R·N`.
    pub normal_angle: Vec<f64>,
    pub newton_residual: f64,
    /// `|sin ω|` at the center.
    pub center_sin: f64,
}

impl GraphPatch {
    /// Largest `|K + 1|` over the patch; `NaN` propagates.
    pub fn max_k_deviation(&self) -> f64 {
        self.monge_k.iter().fold(0.0, |m: f64, k| if k.is_nan() { f64::NAN } else { m.max((k + 1.0).abs()) })
    }

    pub fn max_normal_angle(&self) -> f64 {
        self.normal_angle.iter().fold(0.0, |m: f64, a| if a.is_nan() { f64::NAN } else { m.max(*a) })
    }

    /// Height of the surface point `p` in this patch, by interpolating `h`
    /// at the first two coordinates of `R p + t`; `None` outside the patch.
    pub fn height_gap(&self, p: &Vec3) -> Option<f64> {
        let q = self.motion.apply(p);
        let b = bicubic(&self.h, q.x, q.y)?;
        b.value.is_finite().then(|| b.value - q.z)
    }
}

fn newton_preimage(ff: &Field<Vec3>, m: &RigidMotion, target: Vector2<f64>, seed: (f64, f64)) -> Option<((f64, f64), f64)> {
    let (mut x, mut y) = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let b = bicubic(ff, x, y)?;
        let p = m.apply(&b.value);
        let r = Vector2::new(p.x, p.y) - target;
        let rn = r.norm();
        if rn <= NEWTON_TOL {
            return Some(((x, y), rn));
        }
        let dx = m.rotation * b.dx;
        let dy = m.rotation * b.dy;
        let j = Matrix2::new(dx.x, dy.x, dx.y, dy.y);
        let step = j.try_inverse()? * r;
        x -= step.x;
        y -= step.y;
    }
    None
}

/// Graph patch of `surface` over its tangent plane at node `center`, for the
/// parameter disk of `radius` around it. The `(u, v)` grid has `n` nodes per
/// side on the largest centered square inside the projected disk; heights come
/// from Newton inversion of the bicubic interpolant.
pub fn graph_patch(surface: &SurfaceGrid, center: (usize, usize), radius: f64, n: usize) -> Result<GraphPatch, ReparamError> {
    let grid = surface.grid;
    let (ci, cj) = center;
    if ci >= grid.nx() || cj >= grid.ny() {
        return Err(ReparamError::PatchSize(format!("center ({ci}, {cj}) is off the grid")));
    }
    let (cx, cy) = grid.point(ci, cj);
    let ff = surface.f_field();
    let nf = surface.n_field();
    let c = bicubic(&ff, cx, cy).expect("node inside grid");
    let n0 = surface.n_at(ci, cj);
    let cross = c.dx.cross(&c.dy);
    let center_sin = cross.norm() / (c.dx.norm() * c.dy.norm());
    if !(center_sin > 0.3) {
        return Err(ReparamError::PatchSize(format!("|sin ω| = {center_sin:.3e} at the center, tangent plane degenerate")));
    }
    let t1 = (c.dx - n0 * c.dx.dot(&n0)).normalize();
    let t2 = n0.cross(&t1);
    let rotation = Matrix3::from_rows(&[t1.transpose(), t2.transpose(), n0.transpose()]);
    let motion = RigidMotion { rotation, translation: -(rotation * c.value) };

    // Square of (u, v) targets inscribed in the image of the parameter disk.
    let mut inner = f64::INFINITY;
    for k in 0..256 {
        let a = 2.0 * std::f64::consts::PI * k as f64 / 256.0;
        let (x, y) = (cx + radius * a.cos(), cy + radius * a.sin());
        let b = bicubic(&ff, x, y).ok_or_else(|| ReparamError::PatchSize(format!("parameter disk leaves the grid at ({x:.4}, {y:.4})")))?;
        let q = motion.apply(&b.value);
        inner = inner.min(q.x.hypot(q.y));
    }
    let half = 0.98 * inner / std::f64::consts::SQRT_2;
    let axis = Axis::symmetric(half, n)?;
    let pg = Grid2::new(axis, axis);
    let (o, _) = pg.origin();
    let mut pre: Vec<Option<(f64, f64)>> = vec![None; pg.len()];
    let mut newton_residual = 0.0f64;
    let mut solve = |k: usize, seed: Option<(f64, f64)>, pre: &mut Vec<Option<(f64, f64)>>| {
        let (a, b) = pg.ij(k);
        let target = Vector2::new(axis.at(a), axis.at(b));
        if let Some((xy, r)) = seed.and_then(|s| newton_preimage(&ff, &motion, target, s)) {
            newton_residual = newton_residual.max(r);
            pre[k] = Some(xy);
        }
    };
    // March along the u-axis from the center, then along each v-column.
    solve(pg.idx(o, o), Some((cx, cy)), &mut pre);
    for a in o + 1..n {
        let seed = pre[pg.idx(a - 1, o)];
        solve(pg.idx(a, o), seed, &mut pre);
    }
    for a in (0..o).rev() {
        let seed = pre[pg.idx(a + 1, o)];
        solve(pg.idx(a, o), seed, &mut pre);
    }
    for a in 0..n {
        for b in o + 1..n {
            let seed = pre[pg.idx(a, b - 1)];
            solve(pg.idx(a, b), seed, &mut pre);
        }
        for b in (0..o).rev() {
            let seed = pre[pg.idx(a, b + 1)];
            solve(pg.idx(a, b), seed, &mut pre);
        }
    }
    let inside = |p: &Option<(f64, f64)>| p.is_some_and(|(x, y)| (x - cx).hypot(y - cy) <= radius * (1.0 + 1e-9));
    if let Some(k) = (0..pg.len()).find(|&k| !inside(&pre[k])) {
        let (u, v) = pg.point(pg.ij(k).0, pg.ij(k).1);
        return Err(ReparamError::PatchSize(format!("Newton inversion failed or left the parameter disk at (u, v) = ({u:.4}, {v:.4})")));
    }
    let h = Field {
        grid: pg,
        data: pre
            .iter()
            .map(|p| p.map_or(f64::NAN, |(x, y)| motion.apply(&bicubic(&ff, x, y).expect("inside").value).z))
            .collect::<Vec<_>>(),
    };
    let hu = partial(&h, Dir::X, 1, 4, &[]);
    let hv = partial(&h, Dir::Y, 1, 4, &[]);
    let huu = partial(&h, Dir::X, 2, 4, &[]);
    let hvv = partial(&h, Dir::Y, 2, 4, &[]);
    let huv = partial(&hu, Dir::Y, 1, 4, &[]);
    let mut monge_k = Vec::with_capacity(pg.len());
    let mut normal_angle = Vec::with_capacity(pg.len());
    for k in 0..pg.len() {
        let (a, b) = (hu.data[k], hv.data[k]);
        let w = 1.0 + a * a + b * b;
        monge_k.push((huu.data[k] * hvv.data[k] - huv.data[k] * huv.data[k]) / (w * w));
        let nhat = Vec3::new(-a, -b, 1.0) / w.sqrt();
        let angle = match pre[k] {
            Some((x, y)) => {
                let nt = rotation * bicubic(&nf, x, y).expect("inside").value.normalize();
                nhat.cross(&nt).norm().atan2(nhat.dot(&nt))
            }
            None => f64::NAN,
        };
        normal_angle.push(angle);
    }
    Ok(GraphPatch {
        center,
        center_xy: (cx, cy),
        radius,
        motion,
        h,
        preimage: pre,
        half_width: half,
        monge_k,
        normal_angle,
        newton_residual,
        center_sin,
    })
}

/// Largest disagreement of two patches' heights over the surface nodes
/// that both patches cover.
pub fn patch_transition_error(surface: &SurfaceGrid, a: &GraphPatch, b: &GraphPatch) -> Option<f64> {
    let gaps: Vec<f64> = surface
        .f
        .iter()
        .filter_map(|p| Some((a.height_gap(p)?, b.height_gap(p)?)))
        .map(|(x, y)| x.abs().max(y.abs()))
        .collect();
    (!gaps.is_empty()).then(|| gaps.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{fd_partials, fundamental_forms, Breaks};
    use crate::oracle::{pseudosphere_closed_form, pseudosphere_surface};

    fn tangents(grid: Grid2, sx: f64, sy: f64) -> (Vec<Vec3>, Vec<Vec3>) {
        (0..grid.len())
            .map(|k| {
                let (x, y) = grid.point(grid.ij(k).0, grid.ij(k).1);
                let p = pseudosphere_closed_form(sx * x, sy * y);
                (p.fx * sx, p.fy * sy)
            })
            .unzip()
    }

    /// Closed-form pseudo-sphere in coordinates `(x, y) = (s/2, 2t)`.
    fn scaled(grid: Grid2) -> SurfaceGrid {
        let pts: Vec<_> = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.point(grid.ij(k).0, grid.ij(k).1);
                pseudosphere_closed_form(2.0 * x, 0.5 * y)
            })
            .collect();
        SurfaceGrid {
            lambda: 2.0,
            grid,
            f: pts.iter().map(|p| p.f).collect(),
            n: pts.iter().map(|p| p.n).collect(),
        }
    }

    #[test]
    fn unit_speed_map_is_identity_and_idempotent() {
        let grid = Grid2::square(2.0, 65).unwrap();
        let s = pseudosphere_surface(grid);
        let (fx, fy) = tangents(grid, 1.0, 1.0);
        let c = chebyshev_normalize(&s, &fx, &fy, 1e-9).unwrap();
        assert!(c.s.identity_defect() < 1e-12 && c.t.identity_defect() < 1e-12);
        let dist = c.surface.f.iter().zip(&s.f).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(dist < 1e-12, "{dist}");
        let again = chebyshev_normalize(&c.surface, &c.fs, &c.ft, 1e-9).unwrap();
        assert!(again.s.identity_defect() < 1e-12);
    }

    #[test]
    fn linear_arclength_rescales_axes() {
        let grid = Grid2::square(1.0, 65).unwrap();
        let s = scaled(grid);
        let (fx, fy) = tangents(grid, 2.0, 0.5);
        let c = chebyshev_normalize(&s, &fx, &fy, 1e-9).unwrap();
        assert!((c.s.new.step() - 2.0 * grid.x.step()).abs() < 1e-14);
        assert!((c.t.new.step() - 0.5 * grid.y.step()).abs() < 1e-14);
        for k in 0..c.surface.grid.len() {
            assert!((c.fs[k].norm_squared() - 1.0).abs() < 1e-6);
            assert!((c.ft[k].norm_squared() - 1.0).abs() < 1e-6);
            let g = c.surface.grid;
            let (u, v) = g.point(g.ij(k).0, g.ij(k).1);
            assert!((c.surface.f[k] - pseudosphere_closed_form(u, v).f).norm() < 1e-10);
        }
        // Curvature survives the coordinate change.
        let (nx, ny) = fd_partials(&c.surface.n_field(), 4, &Breaks::none());
        let forms = fundamental_forms(&c.fs, &c.ft, &nx, &ny, 1e-10);
        for k in 0..forms.k.len() {
            let g = c.surface.grid;
            let (u, v) = g.point(g.ij(k).0, g.ij(k).1);
            if (4.0 * (u + v).exp().atan()).sin().abs() > 0.1 {
                assert!((forms.k[k] + 1.0).abs() < 1e-3, "{}", forms.k[k]);
            }
        }
    }

    #[test]
    fn varying_metric_is_rejected() {
        let grid = Grid2::square(1.0, 17).unwrap();
        let s = pseudosphere_surface(grid);
        let (mut fx, fy) = tangents(grid, 1.0, 1.0);
        for (k, v) in fx.iter_mut().enumerate() {
            *v *= 1.0 + 0.01 * grid.ij(k).1 as f64;
        }
        let r = chebyshev_normalize(&s, &fx, &fy, 1e-6);
        assert!(matches!(r, Err(ReparamError::NotAPsFront { which: "E", .. })));
    }

    #[test]
    fn closed_form_graph_patch() {
        let grid = Grid2::square(2.0, 129).unwrap();
        let s = pseudosphere_surface(grid);
        let c = (grid.x.nearest(-1.0), grid.y.nearest(-1.0));
        let p = graph_patch(&s, c, 0.5, 17).unwrap();
        let rn = p.motion.rotation * s.n_at(c.0, c.1);
        assert!((rn - Vec3::z()).norm() < 1e-10);
        assert!(p.max_k_deviation() < 1e-2, "{}", p.max_k_deviation());
        assert!(p.max_normal_angle() < 1e-3, "{}", p.max_normal_angle());
        assert!(p.newton_residual <= NEWTON_TOL);
        // Round trip through the inverse map reproduces the surface.
        for (k, pre) in p.preimage.iter().enumerate() {
            if let Some((x, y)) = pre {
                let (u, v) = p.h.grid.point(p.h.grid.ij(k).0, p.h.grid.ij(k).1);
                let q = p.motion.apply(&(pseudosphere_closed_form(*x, *y).f - pseudosphere_closed_form(0.0, 0.0).f));
                assert!((q - Vec3::new(u, v, p.h.data[k])).norm() < 1e-5);
            }
        }
    }

    #[test]
    fn overlapping_patches_agree() {
        let grid = Grid2::square(2.0, 129).unwrap();
        let s = pseudosphere_surface(grid);
        let a = graph_patch(&s, (grid.x.nearest(-1.0), grid.y.nearest(-1.0)), 0.4, 17).unwrap();
        let b = graph_patch(&s, (grid.x.nearest(-0.9), grid.y.nearest(-1.0)), 0.4, 17).unwrap();
        let e = patch_transition_error(&s, &a, &b).unwrap();
        assert!(e < 1e-4, "{e}");
    }

    #[test]
    fn cusp_center_is_rejected() {
        let grid = Grid2::square(2.0, 65).unwrap();
        let s = pseudosphere_surface(grid);
        let r = graph_patch(&s, grid.origin(), 0.5, 17);
        assert!(matches!(r, Err(ReparamError::PatchSize(_))));
    }
}
