//! Twisted loops stored as truncated Laurent series of 2×2 complex matrices.
//!
//! A twisted loop satisfies `g(-λ) = σ₃ g(λ) σ₃`, so its even-degree
//! coefficients are diagonal and its odd-degree coefficients are
//! anti-diagonal. Only the two structurally allowed entries of each
//! coefficient are stored; the forbidden slots are never computed.

use nalgebra::Matrix2;
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;

/// Largest admissible |degree| in any window.
pub const MAX_DEGREE: i32 = 128;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoopError {
    #[error("degree window [{lo}, {hi}] exceeds the maximum degree {max}")]
    TruncationOverflow { lo: i32, hi: i32, max: i32 },
    #[error("empty degree window [{lo}, {hi}]")]
    EmptyWindow { lo: i32, hi: i32 },
    #[error("coefficient of degree {degree} has a nonzero entry at ({row}, {col}) forbidden by the twisting parity")]
    ParityViolation { degree: i32, row: usize, col: usize },
    #[error("series has a vanishing degree-0 coefficient")]
    SingularSeries,
    #[error("series reciprocal did not converge after {iterations} terms")]
    SeriesDivergence { iterations: usize },
}

/// Closed range of Laurent degrees `lo..=hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DegreeWindow {
    lo: i32,
    hi: i32,
}

impl DegreeWindow {
    pub fn new(lo: i32, hi: i32) -> Result<Self, LoopError> {
        if hi < lo {
            return Err(LoopError::EmptyWindow { lo, hi });
        }
        if lo < -MAX_DEGREE || hi > MAX_DEGREE {
            return Err(LoopError::TruncationOverflow {
                lo,
                hi,
                max: MAX_DEGREE,
            });
        }
        Ok(Self { lo, hi })
    }

    /// `[-n, n]`.
    pub fn symmetric(n: usize) -> Result<Self, LoopError> {
        let n = i32::try_from(n).unwrap_or(i32::MAX);
        Self::new(-n, n)
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    pub fn hi(&self) -> i32 {
        self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: i32) -> bool {
        self.lo <= k && k <= self.hi
    }
}

#[inline]
fn is_even(k: i32) -> bool {
    k.rem_euclid(2) == 0
}

/// Structural positions of the two stored entries for a coefficient of degree `k`.
#[inline]
fn slots(k: i32) -> [(usize, usize); 2] {
    if is_even(k) {
        [(0, 0), (1, 1)]
    } else {
        [(0, 1), (1, 0)]
    }
}

/// Product of two stored coefficient pairs. The parity of the left degree
/// decides how entries pair up; the result parity follows automatically.
#[inline]
fn pair_mul(left_even: bool, a: &[C64; 2], b: &[C64; 2]) -> [C64; 2] {
    if left_even {
        [a[0] * b[0], a[1] * b[1]]
    } else {
        [a[0] * b[1], a[1] * b[0]]
    }
}

fn pair_to_mat(k: i32, p: &[C64; 2]) -> Mat2 {
    let mut m = Mat2::zeros();
    for (slot, v) in slots(k).iter().zip(p) {
        m[*slot] = *v;
    }
    m
}

/// Max-absolute-entry norm used for all residual thresholds.
pub fn mat_norm(m: &Mat2) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

fn pair_norm(p: &[C64; 2]) -> f64 {
    p[0].norm().max(p[1].norm())
}

/// Truncated twisted loop `Σ_{k=k_min}^{k_max} C_k λ^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistedLoop {
    k_min: i32,
    coeffs: Vec<[C64; 2]>,
}

impl TwistedLoop {
    pub fn zeros(window: DegreeWindow) -> Self {
        Self {
            k_min: window.lo,
            coeffs: vec![[ZERO; 2]; window.len()],
        }
    }

    pub fn identity() -> Self {
        Self {
            k_min: 0,
            coeffs: vec![[ONE, ONE]],
        }
    }

    /// Constant diagonal loop `diag(a, d)`.
    pub fn diagonal(a: C64, d: C64) -> Self {
        Self {
            k_min: 0,
            coeffs: vec![[a, d]],
        }
    }

    /// Builds a loop from stored entry pairs: `[C11, C22]` at even degrees,
    /// `[C12, C21]` at odd degrees.
    pub fn from_pairs(k_min: i32, coeffs: Vec<[C64; 2]>) -> Result<Self, LoopError> {
        let hi = k_min + coeffs.len().max(1) as i32 - 1;
        DegreeWindow::new(k_min, hi)?;
        Ok(Self { k_min, coeffs })
    }

    /// Builds a loop from full matrices, rejecting any nonzero entry in a
    /// slot forbidden by the twisting parity.
    pub fn from_matrices(k_min: i32, mats: &[Mat2]) -> Result<Self, LoopError> {
        let mut coeffs = Vec::with_capacity(mats.len());
        for (offset, m) in mats.iter().enumerate() {
            let k = k_min + offset as i32;
            let allowed = slots(k);
            for row in 0..2 {
                for col in 0..2 {
                    if !allowed.contains(&(row, col)) && m[(row, col)] != ZERO {
                        return Err(LoopError::ParityViolation {
                            degree: k,
                            row,
                            col,
                        });
                    }
                }
            }
            coeffs.push([m[allowed[0]], m[allowed[1]]]);
        }
        Self::from_pairs(k_min, coeffs)
    }

    /// Single-term loop `C λ^k`.
    pub fn monomial(k: i32, m: Mat2) -> Result<Self, LoopError> {
        Self::from_matrices(k, &[m])
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_min + self.coeffs.len() as i32 - 1
    }

    pub fn window(&self) -> DegreeWindow {
        DegreeWindow {
            lo: self.k_min,
            hi: self.k_max(),
        }
    }

    /// Stored pair at degree `k` (zero outside the stored range).
    pub fn pair(&self, k: i32) -> [C64; 2] {
        let idx = k - self.k_min;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            [ZERO; 2]
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn pair_mut(&mut self, k: i32) -> Option<&mut [C64; 2]> {
        let idx = k - self.k_min;
        if idx < 0 {
            return None;
        }
        self.coeffs.get_mut(idx as usize)
    }

    /// Full coefficient matrix at degree `k`.
    pub fn coeff(&self, k: i32) -> Mat2 {
        pair_to_mat(k, &self.pair(k))
    }

    pub fn degrees(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max()
    }

    /// Max coefficient norm over all stored degrees.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(pair_norm).fold(0.0, f64::max)
    }

    /// Largest coefficient norm among degrees outside `keep`.
    pub fn norm_outside(&self, keep: DegreeWindow) -> f64 {
        self.degrees()
            .filter(|k| !keep.contains(*k))
            .map(|k| pair_norm(&self.pair(k)))
            .fold(0.0, f64::max)
    }

    /// Max coefficient-wise distance, treating missing degrees as zero.
    pub fn distance(&self, other: &TwistedLoop) -> f64 {
        let lo = self.k_min.min(other.k_min);
        let hi = self.k_max().max(other.k_max());
        (lo..=hi)
            .map(|k| {
                let a = self.pair(k);
                let b = other.pair(k);
                (a[0] - b[0]).norm().max((a[1] - b[1]).norm())
            })
            .fold(0.0, f64::max)
    }

    /// Copy restricted to `window` (zero-padded where needed).
    pub fn restrict(&self, window: DegreeWindow) -> Self {
        Self {
            k_min: window.lo,
            coeffs: (window.lo..=window.hi).map(|k| self.pair(k)).collect(),
        }
    }

    /// Cauchy product restricted to `window`.
    pub fn mul(&self, other: &TwistedLoop, window: DegreeWindow) -> TwistedLoop {
        let mut coeffs = Vec::with_capacity(window.len());
        let (a_lo, a_hi) = (self.k_min, self.k_max());
        let (b_lo, b_hi) = (other.k_min, other.k_max());
        for n in window.lo..=window.hi {
            let mut acc = [ZERO; 2];
            let k_lo = a_lo.max(n - b_hi);
            let k_hi = a_hi.min(n - b_lo);
            for k in k_lo..=k_hi {
                let a = &self.coeffs[(k - a_lo) as usize];
                let b = &other.coeffs[(n - k - b_lo) as usize];
                let p = pair_mul(is_even(k), a, b);
                acc[0] += p[0];
                acc[1] += p[1];
            }
            coeffs.push(acc);
        }
        TwistedLoop {
            k_min: window.lo,
            coeffs,
        }
    }

    /// Cauchy product over the full degree range of the result.
    pub fn mul_full(&self, other: &TwistedLoop) -> Result<TwistedLoop, LoopError> {
        let window = DegreeWindow::new(self.k_min + other.k_min, self.k_max() + other.k_max())?;
        Ok(self.mul(other, window))
    }

    /// Right multiplication by the constant diagonal matrix `diag(a, d)`.
    pub fn mul_diag_right(&self, a: C64, d: C64) -> TwistedLoop {
        let coeffs = self
            .degrees()
            .zip(&self.coeffs)
            .map(|(k, p)| {
                if is_even(k) {
                    [p[0] * a, p[1] * d]
                } else {
                    [p[0] * d, p[1] * a]
                }
            })
            .collect();
        TwistedLoop {
            k_min: self.k_min,
            coeffs,
        }
    }

    /// Left multiplication by the constant diagonal matrix `diag(a, d)`.
    pub fn mul_diag_left(&self, a: C64, d: C64) -> TwistedLoop {
        let coeffs = self.coeffs.iter().map(|p| [a * p[0], d * p[1]]).collect();
        TwistedLoop {
            k_min: self.k_min,
            coeffs,
        }
    }

    pub fn scale(&self, s: C64) -> TwistedLoop {
        TwistedLoop {
            k_min: self.k_min,
            coeffs: self.coeffs.iter().map(|p| [p[0] * s, p[1] * s]).collect(),
        }
    }

    /// `Σ wᵢ Lᵢ` over the union of the operands' windows.
    pub fn linear_combination(terms: &[(f64, &TwistedLoop)]) -> TwistedLoop {
        let lo = terms.iter().map(|(_, l)| l.k_min).min().unwrap_or(0);
        let hi = terms.iter().map(|(_, l)| l.k_max()).max().unwrap_or(0);
        let mut coeffs = vec![[ZERO; 2]; (hi - lo + 1) as usize];
        for (w, l) in terms {
            for (k, p) in l.degrees().zip(&l.coeffs) {
                let c = &mut coeffs[(k - lo) as usize];
                c[0] += p[0] * *w;
                c[1] += p[1] * *w;
            }
        }
        TwistedLoop { k_min: lo, coeffs }
    }

    pub fn add(&self, other: &TwistedLoop) -> TwistedLoop {
        Self::linear_combination(&[(1.0, self), (1.0, other)])
    }

    pub fn sub(&self, other: &TwistedLoop) -> TwistedLoop {
        Self::linear_combination(&[(1.0, self), (-1.0, other)])
    }

    /// Determinant as a scalar Laurent series.
    pub fn det(&self) -> ScalarLaurent {
        let lo = 2 * self.k_min;
        let hi = 2 * self.k_max();
        let mut coeffs = vec![ZERO; (hi - lo + 1) as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            let k = self.k_min + i as i32;
            // C11·C22 on even pairs, −C12·C21 on odd pairs; mixed parities vanish.
            let sign = if is_even(k) { 1.0 } else { -1.0 };
            for (j, b) in self.coeffs.iter().enumerate() {
                let m = self.k_min + j as i32;
                if is_even(k) != is_even(m) {
                    continue;
                }
                coeffs[(k + m - lo) as usize] += a[0] * b[1] * sign;
            }
        }
        ScalarLaurent { k_min: lo, coeffs }
    }

    /// Adjugate, coefficient-wise: `[[d, −b], [−c, a]]`.
    pub fn adjugate(&self) -> TwistedLoop {
        let coeffs = self
            .degrees()
            .zip(&self.coeffs)
            .map(|(k, p)| if is_even(k) { [p[1], p[0]] } else { [-p[0], -p[1]] })
            .collect();
        TwistedLoop {
            k_min: self.k_min,
            coeffs,
        }
    }

    /// Inverse as `adj(a) · (det a)⁻¹`, restricted to `window`.
    pub fn inverse(&self, window: DegreeWindow) -> Result<TwistedLoop, LoopError> {
        let recip = self.det().reciprocal(window)?;
        let adj = self.adjugate();
        // Scalar series times loop: every scalar coefficient sits at an even
        // degree of a determinant only when the loop is twisted, so the
        // product keeps the parity structure.
        let mut coeffs = Vec::with_capacity(window.len());
        for n in window.lo..=window.hi {
            let mut acc = [ZERO; 2];
            for k in adj.degrees() {
                let s = recip.coeff(n - k);
                if s == ZERO {
                    continue;
                }
                let p = adj.pair(k);
                acc[0] += p[0] * s;
                acc[1] += p[1] * s;
            }
            coeffs.push(acc);
        }
        Ok(TwistedLoop {
            k_min: window.lo,
            coeffs,
        })
    }

    /// `Σ C_k λ₀^k`.
    pub fn eval(&self, lambda: f64) -> Mat2 {
        self.eval_weighted(lambda, |_| 1.0)
    }

    /// `∂_t` of the loop at `λ₀ = eᵗ`: `Σ k C_k λ₀^k`.
    pub fn eval_dt(&self, lambda: f64) -> Mat2 {
        self.eval_weighted(lambda, |k| k as f64)
    }

    fn eval_weighted(&self, lambda: f64, weight: impl Fn(i32) -> f64) -> Mat2 {
        let mut m = Mat2::zeros();
        let mut pw = lambda.powi(self.k_min);
        for (k, p) in self.degrees().zip(&self.coeffs) {
            let w = weight(k) * pw;
            for (slot, v) in slots(k).iter().zip(p) {
                m[*slot] += v * w;
            }
            pw *= lambda;
        }
        m
    }

    /// True when every strictly negative coefficient vanishes (a `Λ⁺` loop).
    pub fn is_plus(&self, tol: f64) -> bool {
        self.degrees()
            .filter(|k| *k < 0)
            .all(|k| pair_norm(&self.pair(k)) <= tol)
    }

    /// True for a normalized `Λ⁻_*` loop: no positive degrees and `C₀ = I`.
    pub fn is_normalized_minus(&self, tol: f64) -> bool {
        let c0 = self.pair(0);
        self.degrees()
            .filter(|k| *k > 0)
            .all(|k| pair_norm(&self.pair(k)) <= tol)
            && (c0[0] - ONE).norm() <= tol
            && (c0[1] - ONE).norm() <= tol
    }
}

/// Truncated scalar Laurent series, used for determinants.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarLaurent {
    k_min: i32,
    coeffs: Vec<C64>,
}

impl ScalarLaurent {
    pub fn new(k_min: i32, coeffs: Vec<C64>) -> Result<Self, LoopError> {
        DegreeWindow::new(k_min, k_min + coeffs.len().max(1) as i32 - 1)?;
        Ok(Self { k_min, coeffs })
    }

    pub fn one() -> Self {
        Self {
            k_min: 0,
            coeffs: vec![ONE],
        }
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_min + self.coeffs.len() as i32 - 1
    }

    pub fn coeff(&self, k: i32) -> C64 {
        let idx = k - self.k_min;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            ZERO
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn eval(&self, lambda: f64) -> C64 {
        (self.k_min..=self.k_max())
            .map(|k| self.coeff(k) * lambda.powi(k))
            .sum()
    }

    /// Max coefficient distance to `other`.
    pub fn distance(&self, other: &ScalarLaurent) -> f64 {
        let lo = self.k_min.min(other.k_min);
        let hi = self.k_max().max(other.k_max());
        (lo..=hi)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }

    pub fn mul(&self, other: &ScalarLaurent, window: DegreeWindow) -> ScalarLaurent {
        let coeffs = (window.lo..=window.hi)
            .map(|n| {
                let k_lo = self.k_min.max(n - other.k_max());
                let k_hi = self.k_max().min(n - other.k_min);
                (k_lo..=k_hi)
                    .map(|k| self.coeff(k) * other.coeff(n - k))
                    .sum()
            })
            .collect();
        ScalarLaurent {
            k_min: window.lo,
            coeffs,
        }
    }

    /// Reciprocal on `window` via the Neumann series `Σ_j (1 − d/d₀)^j / d₀`.
    pub fn reciprocal(&self, window: DegreeWindow) -> Result<ScalarLaurent, LoopError> {
        const MAX_TERMS: usize = 400;
        let d0 = self.coeff(0);
        if d0.norm() <= f64::MIN_POSITIVE {
            return Err(LoopError::SingularSeries);
        }
        let inv0 = d0.inv();
        // e = 1 − d/d₀ has no degree-0 term.
        let e = ScalarLaurent {
            k_min: self.k_min,
            coeffs: (self.k_min..=self.k_max())
                .map(|k| if k == 0 { ZERO } else { -self.coeff(k) * inv0 })
                .collect(),
        };
        let mut term = ScalarLaurent {
            k_min: window.lo,
            coeffs: (window.lo..=window.hi)
                .map(|k| if k == 0 { ONE } else { ZERO })
                .collect(),
        };
        let mut sum = term.clone();
        for _ in 0..MAX_TERMS {
            term = term.mul(&e, window);
            let size = term.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for (s, t) in sum.coeffs.iter_mut().zip(&term.coeffs) {
                *s += t;
            }
            if size <= 1e-18 {
                for s in &mut sum.coeffs {
                    *s *= inv0;
                }
                return Ok(sum);
            }
            if !size.is_finite() {
                break;
            }
        }
        Err(LoopError::SeriesDivergence {
            iterations: MAX_TERMS,
        })
    }
}

/// Residuals of the `SU(2)` conditions on sampled real `λ`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UnitarityResidual {
    /// max ‖g g† − I‖
    pub unitary: f64,
    /// max |det g − 1|
    pub determinant: f64,
}

impl UnitarityResidual {
    pub fn max(&self) -> f64 {
        self.unitary.max(self.determinant)
    }

    pub fn merge(self, other: UnitarityResidual) -> UnitarityResidual {
        UnitarityResidual {
            unitary: self.unitary.max(other.unitary),
            determinant: self.determinant.max(other.determinant),
        }
    }
}

pub fn unitarity_check(g: &TwistedLoop, lambdas: &[f64]) -> UnitarityResidual {
    lambdas
        .iter()
        .map(|&lambda| {
            let m = g.eval(lambda);
            let gram = m * m.adjoint() - Mat2::identity();
            UnitarityResidual {
                unitary: mat_norm(&gram),
                determinant: (m.determinant() - ONE).norm(),
            }
        })
        .fold(UnitarityResidual::default(), UnitarityResidual::merge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn mat(a: C64, b: C64, cc: C64, d: C64) -> Mat2 {
        Mat2::new(a, b, cc, d)
    }

    fn k_mat() -> Mat2 {
        mat(ZERO, ONE, -ONE, ZERO)
    }

    fn p_mat() -> Mat2 {
        mat(ZERO, ONE, ONE, ZERO)
    }

    // Brute-force full-matrix convolution, independent of the pair storage.
    fn brute_mul(a: &TwistedLoop, b: &TwistedLoop, lo: i32, hi: i32) -> Vec<Mat2> {
        let mut out = vec![Mat2::zeros(); (hi - lo + 1) as usize];
        for i in a.k_min()..=a.k_max() {
            for j in b.k_min()..=b.k_max() {
                let n = i + j;
                if n < lo || n > hi {
                    continue;
                }
                out[(n - lo) as usize] += a.coeff(i) * b.coeff(j);
            }
        }
        out
    }

    fn arb_loop(lo: i32, hi: i32) -> impl Strategy<Value = TwistedLoop> {
        let n = (hi - lo + 1) as usize;
        proptest::collection::vec(
            proptest::array::uniform4(-1.0f64..1.0),
            n,
        )
        .prop_map(move |raw| {
            let pairs = raw
                .into_iter()
                .map(|r| [c(r[0], r[1]), c(r[2], r[3])])
                .collect();
            TwistedLoop::from_pairs(lo, pairs).unwrap()
        })
    }

    #[test]
    fn identity_is_neutral() {
        let x = TwistedLoop::from_matrices(-1, &[mat(ZERO, c(0.3, 1.0), c(2.0, 0.0), ZERO), Mat2::identity() * c(0.5, 0.0)]).unwrap();
        let w = DegreeWindow::new(-1, 0).unwrap();
        assert_eq!(TwistedLoop::identity().mul(&x, w), x);
        assert_eq!(x.mul(&TwistedLoop::identity(), w), x);
    }

    #[test]
    fn lambda_k_squared() {
        let a = TwistedLoop::monomial(1, k_mat()).unwrap();
        let sq = a.mul(&a, DegreeWindow::new(0, 2).unwrap());
        assert_eq!(sq.coeff(2), -Mat2::identity());
        assert_eq!(sq.coeff(1), Mat2::zeros());
        assert_eq!(sq.coeff(0), Mat2::zeros());
    }

    #[test]
    fn parity_violation_rejected() {
        let err = TwistedLoop::monomial(1, Mat2::identity()).unwrap_err();
        assert!(matches!(err, LoopError::ParityViolation { degree: 1, .. }));
        let err = TwistedLoop::monomial(2, p_mat()).unwrap_err();
        assert!(matches!(err, LoopError::ParityViolation { degree: 2, .. }));
    }

    #[test]
    fn oversized_window_is_truncation_overflow() {
        let err = DegreeWindow::new(-(MAX_DEGREE + 1), 0).unwrap_err();
        assert!(matches!(err, LoopError::TruncationOverflow { .. }));
        let big = TwistedLoop::zeros(DegreeWindow::symmetric(100).unwrap());
        assert!(matches!(
            big.mul_full(&big),
            Err(LoopError::TruncationOverflow { .. })
        ));
    }

    #[test]
    fn det_of_identity_and_unit_diagonal() {
        let d = TwistedLoop::identity().det();
        assert_eq!(d.coeff(0), ONE);
        let a0 = C64::from_polar(1.0, 0.7);
        let g = TwistedLoop::diagonal(a0, a0.conj());
        assert!((g.det().coeff(0) - ONE).norm() < 1e-15);
    }

    #[test]
    fn det_of_identity_plus_q_over_lambda() {
        let b = c(0.4, -0.3);
        let q = mat(ZERO, b, -b.conj(), ZERO);
        let g = TwistedLoop::from_matrices(-1, &[q, Mat2::identity()]).unwrap();
        let d = g.det();
        // Hand convolution: 1 + |b|² λ⁻².
        assert!((d.coeff(0) - ONE).norm() < 1e-15);
        assert!((d.coeff(-2) - c(b.norm_sqr(), 0.0)).norm() < 1e-15);
        assert!(d.coeff(-1).norm() < 1e-15);
        // Brute-force oracle on full matrices.
        let mut brute = vec![ZERO; 3];
        for i in -1..=0 {
            for j in -1..=0 {
                let (x, y) = (g.coeff(i), g.coeff(j));
                brute[(i + j + 2) as usize] += x[(0, 0)] * y[(1, 1)] - x[(0, 1)] * y[(1, 0)];
            }
        }
        for k in -2..=0 {
            assert!((d.coeff(k) - brute[(k + 2) as usize]).norm() < 1e-15);
        }
    }

    #[test]
    fn reciprocal_examples() {
        let w = DegreeWindow::new(-8, 0).unwrap();
        let one = ScalarLaurent::one().reciprocal(w).unwrap();
        assert_eq!(one.coeff(0), ONE);
        let eps = 0.1;
        let d = ScalarLaurent::new(-2, vec![c(eps, 0.0), ZERO, ONE]).unwrap();
        let r = d.reciprocal(w).unwrap();
        for (k, expected) in [(0, 1.0), (-2, -eps), (-4, eps * eps), (-6, -eps.powi(3)), (-8, eps.powi(4))] {
            assert!((r.coeff(k) - c(expected, 0.0)).norm() < 1e-16, "degree {k}");
        }
        assert!(r.coeff(-1).norm() == 0.0);
        let zero = ScalarLaurent::new(-1, vec![ONE, ZERO]).unwrap();
        assert_eq!(zero.reciprocal(w), Err(LoopError::SingularSeries));
    }

    proptest! {
        #[test]
        fn reciprocal_residual(raw in proptest::collection::vec(-0.05f64..0.05, 8)) {
            let mut coeffs: Vec<C64> = raw.chunks(2).map(|p| c(p[0], p[1])).collect();
            coeffs.insert(2, c(1.0, 0.2));
            let d = ScalarLaurent::new(-2, coeffs).unwrap();
            let w = DegreeWindow::new(-12, 12).unwrap();
            let r = d.reciprocal(DegreeWindow::new(-40, 40).unwrap()).unwrap();
            let prod = d.mul(&r, w);
            for k in -12..=12 {
                let expected = if k == 0 { ONE } else { ZERO };
                prop_assert!((prod.coeff(k) - expected).norm() < 1e-12);
            }
        }

        #[test]
        fn mul_matches_brute_force(a in arb_loop(-2, 2), b in arb_loop(-2, 2)) {
            let w = DegreeWindow::new(-4, 4).unwrap();
            let fast = a.mul(&b, w);
            let slow = brute_mul(&a, &b, -4, 4);
            for k in -4..=4 {
                let diff = fast.coeff(k) - slow[(k + 4) as usize];
                prop_assert!(mat_norm(&diff) < 1e-13);
                // Parity closure: the full matrix has zeros in forbidden slots.
                let full = slow[(k + 4) as usize];
                let forbidden = if k.rem_euclid(2) == 0 { [(0, 1), (1, 0)] } else { [(0, 0), (1, 1)] };
                for s in forbidden {
                    prop_assert!(full[s].norm() < 1e-13);
                }
            }
        }

        #[test]
        fn inverse_is_parity_respecting_and_inverts(a in arb_loop(-2, 0)) {
            // Near-identity Λ⁻ loop keeps the Neumann series convergent.
            let mut g = a.scale(c(0.1, 0.0));
            let p0 = g.pair_mut(0).unwrap();
            p0[0] += ONE;
            p0[1] += ONE;
            let w = DegreeWindow::new(-40, 0).unwrap();
            let inv = g.inverse(w).unwrap();
            let prod = g.mul(&inv, DegreeWindow::new(-20, 0).unwrap());
            prop_assert!(prod.distance(&TwistedLoop::identity()) < 1e-12);
        }
    }

    #[test]
    fn inverse_examples() {
        let w = DegreeWindow::new(-8, 8).unwrap();
        assert_eq!(TwistedLoop::identity().inverse(w).unwrap().restrict(DegreeWindow::new(0, 0).unwrap()), TwistedLoop::identity());
        let e = C64::from_polar(1.0, 0.4);
        let g = TwistedLoop::diagonal(e, e.conj());
        let inv = g.inverse(w).unwrap();
        assert!((inv.coeff(0)[(0, 0)] - e.conj()).norm() < 1e-15);
        assert!((inv.coeff(0)[(1, 1)] - e).norm() < 1e-15);

        let b = c(0.4, -0.3);
        let q = mat(ZERO, b, -b.conj(), ZERO);
        let g = TwistedLoop::from_matrices(-1, &[q, Mat2::identity()]).unwrap();
        let inv = g.inverse(DegreeWindow::new(-60, 0).unwrap()).unwrap();
        let prod = g.mul(&inv, DegreeWindow::new(-16, 0).unwrap());
        assert!(prod.distance(&TwistedLoop::identity()) < 1e-12);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(TwistedLoop::identity().eval(3.7), Mat2::identity());
        let a = TwistedLoop::monomial(1, k_mat()).unwrap();
        assert_eq!(a.eval(2.0), k_mat() * c(2.0, 0.0));
        assert_eq!(a.eval_dt(2.0), k_mat() * c(2.0, 0.0));
    }

    // exp(s·(i/2)·λ·P) truncated at degree `n`; coefficients (s i/2)^k P^k / k!.
    fn exp_series(s: f64, n: i32) -> TwistedLoop {
        let x = p_mat() * c(0.0, 0.5 * s);
        let mut mats = Vec::new();
        let mut term = Mat2::identity();
        for k in 0..=n {
            mats.push(term);
            term = term * x / c((k + 1) as f64, 0.0);
        }
        TwistedLoop::from_matrices(0, &mats).unwrap()
    }

    // Independent oracle: exp(iθP) = cos θ I + i sin θ P for P² = I.
    fn exp_closed(theta: f64) -> Mat2 {
        Mat2::identity() * c(theta.cos(), 0.0) + p_mat() * c(0.0, theta.sin())
    }

    #[test]
    fn eval_matches_matrix_exponential() {
        let g = exp_series(1.0, 16);
        let diff = g.eval(1.0) - exp_closed(0.5);
        assert!(mat_norm(&diff) < 1e-15);
    }

    #[test]
    fn unitarity_examples() {
        assert_eq!(unitarity_check(&TwistedLoop::identity(), &[0.5, 1.0, 2.0]).max(), 0.0);
        let g = exp_series(1.0, 16);
        assert!(unitarity_check(&g, &[0.5, 1.0, 2.0]).max() < 1e-10);
        let scaled = TwistedLoop::diagonal(c(1.1, 0.0), c(1.1, 0.0));
        let r = unitarity_check(&scaled, &[1.0]);
        assert!((r.determinant - 0.21).abs() < 1e-12);
        assert!((r.unitary - 0.21).abs() < 1e-12);
    }

    #[test]
    fn eval_is_homomorphism_up_to_truncation() {
        // Truncation residual of eval(a·b) − eval(a)eval(b) shrinks as the window grows.
        let mut last = f64::INFINITY;
        for n in [8usize, 16, 32] {
            let a = exp_series(1.3, n as i32);
            let b = exp_series(-0.4, n as i32).restrict(DegreeWindow::new(0, n as i32).unwrap());
            let w = DegreeWindow::new(0, n as i32).unwrap();
            let prod = a.mul(&b, w);
            let lam = 2.0;
            let exact = exp_closed(0.5 * 0.9 * lam);
            let resid = mat_norm(&(prod.eval(lam) - exact));
            assert!(resid < last || resid < 1e-14, "window {n}: {resid} vs {last}");
            last = resid;
        }
        assert!(last < 1e-14);
    }
}
