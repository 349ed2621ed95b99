//! Immersion and normal from the extended frame via the Sym formula.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::frame::{ConnectionField, FrameField};
use crate::grid::{Field, Grid2};
use crate::laurent::{mat_norm, Mat2, C64};

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymError {
    #[error("spectral parameter must be positive, got {0}")]
    BadLambda(f64),
    #[error("matrix is not in su(2) at node ({i}, {j}): residual {residual:.3e}")]
    Structure { i: usize, j: usize, residual: f64 },
}

fn z() -> C64 {
    C64::new(0.0, 0.0)
}

/// The su(2) basis `ê₁ = ½[[0,i],[i,0]]`, `ê₂ = ½[[0,−1],[1,0]]`, `ê₃ = ½[[i,0],[0,−i]]`.
pub fn basis() -> [Mat2; 3] {
    let h = 0.5;
    [
        Mat2::new(z(), C64::new(0.0, h), C64::new(0.0, h), z()),
        Mat2::new(z(), C64::new(-h, 0.0), C64::new(h, 0.0), z()),
        Mat2::new(C64::new(0.0, h), z(), z(), C64::new(0.0, -h)),
    ]
}

/// Distance of `x` from su(2): `max(‖X + X†‖, |tr X|)`.
pub fn su2_defect(x: &Mat2) -> f64 {
    mat_norm(&(x + x.adjoint())).max(x.trace().norm())
}

/// Coordinates `⟨X, ê_k⟩ = −2 tr(X ê_k)` without a structure check.
pub fn su2_coords(x: &Mat2) -> Vec3 {
    let b = basis();
    Vec3::new(
        -2.0 * (x * b[0]).trace().re,
        -2.0 * (x * b[1]).trace().re,
        -2.0 * (x * b[2]).trace().re,
    )
}

/// `su2_coords` with a structure check at tolerance `tol` (relative to `1 + ‖X‖`).
pub fn su2_to_r3(x: &Mat2, tol: f64) -> Result<Vec3, f64> {
    let d = su2_defect(x);
    if d > tol * (1.0 + mat_norm(x)) {
        return Err(d);
    }
    Ok(su2_coords(x))
}

pub fn r3_to_su2(v: &Vec3) -> Mat2 {
    let b = basis();
    b[0] * C64::new(v.x, 0.0) + b[1] * C64::new(v.y, 0.0) + b[2] * C64::new(v.z, 0.0)
}

/// Default su(2) structure tolerance for Sym-formula output.
pub const STRUCTURE_TOL: f64 = 1e-6;

/// Immersion `f` and unit normal `N` on a grid at a fixed `λ₀`.
#[derive(Clone, Debug, Serialize)]
pub struct SurfaceGrid {
    pub lambda: f64,
    pub grid: Grid2,
    pub f: Vec<Vec3>,
    pub n: Vec<Vec3>,
}

impl SurfaceGrid {
    pub fn f_at(&self, i: usize, j: usize) -> Vec3 {
        self.f[self.grid.idx(i, j)]
    }

    pub fn n_at(&self, i: usize, j: usize) -> Vec3 {
        self.n[self.grid.idx(i, j)]
    }

    pub fn f_field(&self) -> Field<Vec3> {
        Field {
            grid: self.grid,
            data: self.f.clone(),
        }
    }

    pub fn n_field(&self) -> Field<Vec3> {
        Field {
            grid: self.grid,
            data: self.n.clone(),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<(), SymError> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(SymError::BadLambda(lambda))
    }
}

/// `f = (∂_tÛ)Û⁻¹` and `N = Û ê₃ Û⁻¹` at `λ₀ = eᵗ`, with `∂_t` taken exactly
/// on the coefficients as `Σ k Û_k λ₀^k`.
pub fn sym_immersion(frame: &FrameField, lambda: f64) -> Result<SurfaceGrid, SymError> {
    check_lambda(lambda)?;
    let g = frame.grid;
    let e3 = basis()[2];
    let out: Vec<Result<(Vec3, Vec3), SymError>> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = g.ij(k);
            let u = frame.u_hat[k].eval(lambda);
            let ut = frame.u_hat[k].eval_dt(lambda);
            let inv = u.try_inverse().unwrap_or_else(|| u.adjoint());
            let fm = ut * inv;
            let f = su2_to_r3(&fm, STRUCTURE_TOL).map_err(|residual| SymError::Structure { i, j, residual })?;
            let nm = u * e3 * inv;
            let n = su2_to_r3(&nm, STRUCTURE_TOL).map_err(|residual| SymError::Structure { i, j, residual })?;
            Ok((f, n))
        })
        .collect();
    let mut f = Vec::with_capacity(g.len());
    let mut n = Vec::with_capacity(g.len());
    for r in out {
        let (a, b) = r?;
        f.push(a);
        n.push(b);
    }
    Ok(SurfaceGrid { lambda, grid: g, f, n })
}

/// Derivative fields of `f` and `N`, from the connection forms.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub fx: Vec<Vec3>,
    pub fy: Vec<Vec3>,
    pub nx: Vec<Vec3>,
    pub ny: Vec<Vec3>,
}

/// `f_x = Û(λ₀·ω̂₁⁽¹⁾)Û⁻¹`, `f_y = Û(λ₀⁻¹·(−ω̂₂⁽⁻¹⁾))Û⁻¹`,
/// `N_x = Û[ω̂₁, ê₃]Û⁻¹`, `N_y = Û[ω̂₂, ê₃]Û⁻¹`, all at `λ₀`.
pub fn analytic_derivatives(frame: &FrameField, conn: &ConnectionField, lambda: f64) -> Result<Derivatives, SymError> {
    check_lambda(lambda)?;
    let g = frame.grid;
    let e3 = basis()[2];
    let lam = C64::new(lambda, 0.0);
    let out: Vec<[Vec3; 4]> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = g.ij(k);
            let u = frame.u_hat[k].eval(lambda);
            let inv = u.adjoint();
            let (w10, w11) = conn.omega1(i, j);
            let w2 = conn.omega2(i, j);
            let w1 = w10 + w11 * lam;
            let w2l = w2 / lam;
            let conj = |m: Mat2| su2_coords(&(u * m * inv));
            [
                conj(w11 * lam),
                conj(-w2l),
                conj(w1 * e3 - e3 * w1),
                conj(w2l * e3 - e3 * w2l),
            ]
        })
        .collect();
    Ok(Derivatives {
        fx: out.iter().map(|v| v[0]).collect(),
        fy: out.iter().map(|v| v[1]).collect(),
        nx: out.iter().map(|v| v[2]).collect(),
        ny: out.iter().map(|v| v[3]).collect(),
    })
}

/// Tangent fields `(f_x, f_y)` without finite differencing.
pub fn analytic_tangents(frame: &FrameField, conn: &ConnectionField, lambda: f64) -> Result<(Vec<Vec3>, Vec<Vec3>), SymError> {
    let d = analytic_derivatives(frame, conn, lambda)?;
    Ok((d.fx, d.fy))
}

/// Rigid motion `x ↦ R x + t` with `det R = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RigidMotion {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl RigidMotion {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }
}

/// Orthogonal Procrustes without reflection: the rigid motion taking `src`
/// closest to `dst` in least squares, and the max node distance after it.
pub fn procrustes(src: &[Vec3], dst: &[Vec3]) -> (RigidMotion, f64) {
    assert_eq!(src.len(), dst.len());
    let n = src.len().max(1) as f64;
    let ca = src.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let cb = dst.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let h = src
        .iter()
        .zip(dst)
        .fold(Matrix3::zeros(), |acc, (a, b)| acc + (a - ca) * (b - cb).transpose());
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let v = vt.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let rotation = v * Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * u.transpose();
    let translation = cb - rotation * ca;
    let m = RigidMotion { rotation, translation };
    let err = src
        .iter()
        .zip(dst)
        .map(|(a, b)| (m.apply(a) - b).norm())
        .fold(0.0, f64::max);
    (m, err)
}

/// Max distance between `a` and `b` after removing the mean offset.
pub fn max_distance_up_to_translation(a: &[Vec3], b: &[Vec3]) -> f64 {
    let n = a.len().max(1) as f64;
    let shift = a.iter().zip(b).fold(Vec3::zeros(), |s, (p, q)| s + (q - p)) / n;
    a.iter()
        .zip(b)
        .map(|(p, q)| (p + shift - q).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{extract_connection, frame_field, FrameOptions};
    use crate::potentials::{preset_c0_kink, preset_vacuum};
    use proptest::prelude::*;

    #[test]
    fn basis_images() {
        let b = basis();
        assert_eq!(su2_to_r3(&b[2], 1e-12).unwrap(), Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(su2_to_r3(&Mat2::zeros(), 1e-12).unwrap(), Vec3::zeros());
        let comm = b[0] * b[1] - b[1] * b[0];
        let v = su2_to_r3(&comm, 1e-12).unwrap();
        let cross = su2_coords(&b[0]).cross(&su2_coords(&b[1]));
        assert!((v - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
        assert!((v - cross).norm() < 1e-15);
    }

    #[test]
    fn non_su2_rejected() {
        assert!(su2_to_r3(&Mat2::identity(), 1e-8).is_err());
    }

    proptest! {
        #[test]
        fn commutator_is_cross_product(a in proptest::array::uniform3(-2.0f64..2.0), b in proptest::array::uniform3(-2.0f64..2.0)) {
            let (u, v) = (Vec3::from(a), Vec3::from(b));
            let (x, y) = (r3_to_su2(&u), r3_to_su2(&v));
            let c = su2_coords(&(x * y - y * x));
            prop_assert!((c - u.cross(&v)).norm() < 1e-13);
            prop_assert!((su2_coords(&x) - u).norm() < 1e-14);
            // ⟨X, Y⟩ = −2 tr(XY) is the Euclidean inner product.
            prop_assert!((-2.0 * (x * y).trace().re - u.dot(&v)).abs() < 1e-13);
        }
    }

    #[test]
    fn vacuum_is_a_line() {
        let grid = Grid2::square(1.0, 9).unwrap();
        let spec = preset_vacuum();
        let frame = frame_field(&spec, grid, 16, FrameOptions::default()).unwrap();
        let conn = extract_connection(&frame, &spec).unwrap();
        for lam in [0.5, 1.0, 2.0] {
            let s = sym_immersion(&frame, lam).unwrap();
            let (fx, fy) = analytic_tangents(&frame, &conn, lam).unwrap();
            for k in 0..grid.len() {
                let (x, y) = grid.point(grid.ij(k).0, grid.ij(k).1);
                assert!((s.f[k] - Vec3::new(x * lam + y / lam, 0.0, 0.0)).norm() < 1e-12);
                assert!((fx[k] - Vec3::new(lam, 0.0, 0.0)).norm() < 1e-12);
                assert!((fy[k] - Vec3::new(1.0 / lam, 0.0, 0.0)).norm() < 1e-12);
                assert!((s.n[k].norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kink_tangent_lengths() {
        let grid = Grid2::square(1.0, 17).unwrap();
        let spec = preset_c0_kink(1.0);
        let frame = frame_field(&spec, grid, 16, FrameOptions::default()).unwrap();
        let conn = extract_connection(&frame, &spec).unwrap();
        let s = sym_immersion(&frame, 1.0).unwrap();
        let (i0, j0) = grid.origin();
        assert!(s.f_at(i0, j0).norm() < 1e-15);
        for lam in [0.5, 2.0] {
            let (fx, fy) = analytic_tangents(&frame, &conn, lam).unwrap();
            for k in 0..grid.len() {
                assert!((fx[k].norm() - lam).abs() < 1e-9);
                assert!((fy[k].norm() - 1.0 / lam).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn procrustes_recovers_motion() {
        let pts: Vec<Vec3> = (0..20).map(|k| Vec3::new((k as f64).sin(), (k as f64 * 0.7).cos(), k as f64 * 0.1)).collect();
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0).into_inner();
        let t = Vec3::new(1.0, -2.0, 0.5);
        let moved: Vec<Vec3> = pts.iter().map(|p| rot * p + t).collect();
        let (m, err) = procrustes(&pts, &moved);
        assert!(err < 1e-12);
        assert!((m.rotation - rot).norm() < 1e-12);
        // A mirror image cannot be matched by a proper rotation.
        let mirrored: Vec<Vec3> = pts.iter().map(|p| Vec3::new(-p.x, p.y, p.z)).collect();
        let (m, err) = procrustes(&pts, &mirrored);
        assert!(err > 1e-3);
        assert!((m.rotation.determinant() - 1.0).abs() < 1e-12);
    }
}
