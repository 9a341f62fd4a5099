//! Small dense vector helpers shared by the proximal and solver code.

use nalgebra::{DMatrix, DVector};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm2_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// ‖a − b‖₂
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub fn dist2_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// ℓ_p norm for p > 1, scaled by the largest magnitude before powering.
pub fn lp_norm(a: &[f64], p: f64) -> f64 {
    let amax = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if amax == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        return norm2(a);
    }
    let s: f64 = if p == 3.0 {
        a.iter().map(|v| (v.abs() / amax).powi(3)).sum()
    } else {
        a.iter().map(|v| (v.abs() / amax).powf(p)).sum()
    };
    amax * if p == 3.0 { s.cbrt() } else { s.powf(1.0 / p) }
}

/// Gradient of ‖·‖_p at a nonzero point: sign(a_i)|a_i|^{p−1} / ‖a‖_p^{p−1}.
pub fn lp_norm_grad(a: &[f64], p: f64, out: &mut [f64]) {
    let n = lp_norm(a, p);
    if n == 0.0 {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    for (o, v) in out.iter_mut().zip(a) {
        let r = v.abs() / n;
        *o = v.signum() * if p == 3.0 { r * r } else { r.powf(p - 1.0) };
    }
}

/// Dual exponent q = p / (p − 1).
#[inline]
pub fn dual_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Solves `m x = rhs` for a symmetric positive definite `m` (row-major, n×n).
/// Returns `None` when the Cholesky factorization fails.
pub fn solve_spd(m: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    debug_assert_eq!(m.len(), n * n);
    let mat = DMatrix::from_row_slice(n, n, m);
    let scale = (0..n).map(|i| m[i * n + i].abs()).fold(0.0, f64::max);
    let chol = mat.cholesky()?;
    let l = chol.l_dirty();
    if (0..n).any(|i| l[(i, i)] * l[(i, i)] <= 1e-13 * scale) {
        return None;
    }
    let x = chol.solve(&DVector::from_column_slice(rhs));
    Some(x.as_slice().to_vec())
}

/// In-place Cholesky solve of `m x = rhs` (row-major, n×n); `m` is
/// overwritten by its factor and `rhs` by the solution. Returns `false` when
/// a pivot is not clearly positive.
pub fn cholesky_solve_in_place(m: &mut [f64], rhs: &mut [f64]) -> bool {
    let n = rhs.len();
    let scale = (0..n).map(|i| m[i * n + i].abs()).fold(0.0, f64::max);
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= m[j * n + k] * m[j * n + k];
        }
        if !(d > 1e-13 * scale) {
            return false;
        }
        let ljj = d.sqrt();
        m[j * n + j] = ljj;
        for i in j + 1..n {
            let mut v = m[i * n + j];
            for k in 0..j {
                v -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = v / ljj;
        }
    }
    for i in 0..n {
        let mut v = rhs[i];
        for k in 0..i {
            v -= m[i * n + k] * rhs[k];
        }
        rhs[i] = v / m[i * n + i];
    }
    for i in (0..n).rev() {
        let mut v = rhs[i];
        for k in i + 1..n {
            v -= m[k * n + i] * rhs[k];
        }
        rhs[i] = v / m[i * n + i];
    }
    true
}

/// Sample mean of a slice; 0 for empty input.
pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}
