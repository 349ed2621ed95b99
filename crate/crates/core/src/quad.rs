//! Cumulative quadrature on uniform samples, integrating outward from a seed node.

use crate::diff::Linear;

/// Increment `∫_{t_j}^{t_{j+1}} g` on a half-line of samples `g[0..m]`.
/// Interior cells use the 4-point symmetric rule, end cells a one-sided
/// 4-point rule; both are exact for cubics. Short lines fall back to trapezoid.
fn increment<T: Linear>(g: &[&T], j: usize, h: f64) -> T {
    let m = g.len();
    let k = h / 24.0;
    if m < 4 {
        return T::lincomb(&[(h / 2.0, g[j]), (h / 2.0, g[j + 1])]);
    }
    if j == 0 {
        T::lincomb(&[(9.0 * k, g[0]), (19.0 * k, g[1]), (-5.0 * k, g[2]), (k, g[3])])
    } else if j == m - 2 {
        T::lincomb(&[(9.0 * k, g[j + 1]), (19.0 * k, g[j]), (-5.0 * k, g[j - 1]), (k, g[j - 2])])
    } else {
        T::lincomb(&[(-k, g[j - 1]), (13.0 * k, g[j]), (13.0 * k, g[j + 1]), (-k, g[j + 2])])
    }
}

fn half_line<T: Linear>(g: &[&T], h: f64, zero: &T, out: &mut Vec<T>) {
    out.push(zero.clone());
    for j in 0..g.len() - 1 {
        let inc = increment(g, j, h);
        let next = T::lincomb(&[(1.0, &out[j]), (1.0, &inc)]);
        out.push(next);
    }
}

/// `G(t_i) = ∫_{t_seed}^{t_i} g` for uniform samples with spacing `h`.
pub fn cumulative<T: Linear>(g: &[T], h: f64, seed: usize, zero: &T) -> Vec<T> {
    let n = g.len();
    let mut out = vec![zero.clone(); n];
    let fwd: Vec<&T> = g[seed..].iter().collect();
    let mut buf = Vec::with_capacity(n);
    if fwd.len() > 1 {
        half_line(&fwd, h, zero, &mut buf);
        out[seed..].clone_from_slice(&buf);
    }
    let back: Vec<&T> = g[..=seed].iter().rev().collect();
    if back.len() > 1 {
        buf.clear();
        half_line(&back, h, zero, &mut buf);
        for (k, v) in buf.into_iter().enumerate() {
            out[seed - k] = T::lincomb(&[(-1.0, &v)]);
        }
    }
    out
}

/// Per-cell integrals `∫_{t_j}^{t_{j+1}} g` along a full line, fourth order.
pub fn cell_increments<T: Linear>(g: &[T], h: f64) -> Vec<T> {
    let refs: Vec<&T> = g.iter().collect();
    (0..g.len().saturating_sub(1)).map(|j| increment(&refs, j, h)).collect()
}

/// Running sums of cell increments, anchored to `zero` at node `seed`.
pub fn accumulate<T: Linear>(inc: &[T], seed: usize, zero: &T) -> Vec<T> {
    let n = inc.len() + 1;
    let mut out = vec![zero.clone(); n];
    for j in seed..n - 1 {
        out[j + 1] = T::lincomb(&[(1.0, &out[j]), (1.0, &inc[j])]);
    }
    for j in (0..seed).rev() {
        out[j] = T::lincomb(&[(1.0, &out[j + 1]), (-1.0, &inc[j])]);
    }
    out
}

/// `∫` of uniform samples via composite trapezoid.
pub fn trapezoid(g: &[f64], h: f64) -> f64 {
    if g.len() < 2 {
        return 0.0;
    }
    h * (g.iter().sum::<f64>() - 0.5 * (g[0] + g[g.len() - 1]))
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}
