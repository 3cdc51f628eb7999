//! Thin helpers over nalgebra for the dense complex matrices used everywhere.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// LU inverse; fails on exact singularity or non-finite output.
pub fn inverse(m: &CMat) -> Result<CMat> {
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("matrix is singular".into()))?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("matrix inverse is not finite".into()));
    }
    Ok(inv)
}

/// Singular value decomposition with singular values sorted in decreasing
/// order. Returns (U, σ, V) with `m = U diag(σ) V*`.
pub fn svd(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let s = m.clone().svd(true, true);
    let u = s.u.expect("u requested");
    let v = s.v_t.expect("v_t requested").adjoint();
    let mut order: Vec<usize> = (0..s.singular_values.len()).collect();
    order.sort_by(|&a, &b| s.singular_values[b].total_cmp(&s.singular_values[a]));
    let sig = order.iter().map(|&i| s.singular_values[i]).collect();
    let u = CMat::from_fn(u.nrows(), order.len(), |r, j| u[(r, order[j])]);
    let v = CMat::from_fn(v.nrows(), order.len(), |r, j| v[(r, order[j])]);
    (u, sig, v)
}

/// Singular values only, decreasing.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn sigma_min(m: &CMat) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Where a rank decision was made and how clean the gap was.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankGap {
    pub scale: f64,
    /// Smallest singular value kept as "nonzero" (∞ if none).
    pub kept_min: f64,
    /// Largest singular value declared zero (0 if none).
    pub dropped_max: f64,
}

/// Orthonormal kernel basis of a square matrix.
///
/// Singular values below `eps·scale` are treated as zero, where
/// `scale = max(σ_max, floor)`. Anything in `[eps·scale, gap·eps·scale]` is
/// rejected as ambiguous.
pub fn kernel_basis(m: &CMat, eps: f64, gap: f64, floor: f64, level: &str) -> Result<(CMat, RankGap)> {
    let n = m.ncols();
    if n == 0 {
        return Ok((CMat::zeros(m.nrows(), 0), RankGap { scale: floor, kept_min: f64::INFINITY, dropped_max: 0.0 }));
    }
    let (_, sig, v) = svd(m);
    let scale = sig[0].max(floor);
    let lo = eps * scale;
    let hi = gap * lo;
    if let Some(&s) = sig.iter().find(|&&s| s >= lo && s <= hi) {
        return Err(Error::RankAmbiguous { level: level.to_string(), sigma: s, lo, hi });
    }
    let kept = sig.iter().filter(|&&s| s > hi).count();
    let basis = v.columns(kept, n - kept).into_owned();
    let gap = RankGap {
        scale,
        kept_min: if kept > 0 { sig[kept - 1] } else { f64::INFINITY },
        dropped_max: if kept < n { sig[kept] } else { 0.0 },
    };
    Ok((basis, gap))
}

/// Orthogonal projection onto the span of orthonormal columns.
pub fn projector(q: &CMat) -> CMat {
    q * q.adjoint()
}

/// Inverse of `x` regarded as an operator on ran(Q), extended by zero.
pub fn inverse_on(q: &CMat, x: &CMat) -> Result<CMat> {
    if q.ncols() == 0 {
        return Ok(CMat::zeros(q.nrows(), q.nrows()));
    }
    let red = q.adjoint() * x * q;
    Ok(q * inverse(&red)? * q.adjoint())
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// (A − A*)/(2i), the "imaginary part" of a matrix.
pub fn imag_part(a: &CMat) -> CMat {
    (a - a.adjoint()) * c(0.0, -0.5)
}

/// (A + A*)/2.
pub fn real_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * re(0.5)
}

/// Eigenvalues of a Hermitian matrix (the Hermitian part is used), increasing.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let h = real_part(a);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// `W diag(d) W*` without forming the diagonal matrix.
pub fn sandwich_diag(w: &CMat, d: &[C64]) -> CMat {
    let mut wd = w.clone();
    for (j, mut col) in wd.column_iter_mut().enumerate() {
        col *= d[j];
    }
    wd * w.adjoint()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let m = CMat::from_fn(4, 4, |i, j| c((i * 3 + j) as f64 % 5.0 - 2.0, (i as f64 - j as f64) * 0.3));
        let (u, s, v) = svd(&m);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let d = CMat::from_diagonal(&CVec::from_iterator(4, s.iter().map(|&x| re(x))));
        assert!(max_abs(&(&u * d * v.adjoint() - &m)) < 1e-12);
    }

    #[test]
    fn kernel_of_diag() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![re(1.0), re(0.0), re(2.0)]));
        let (k, gap) = kernel_basis(&m, 1e-8, 10.0, 1.0, "t").unwrap();
        assert_eq!(k.ncols(), 1);
        assert!((k[(1, 0)].norm() - 1.0).abs() < 1e-12);
        assert_eq!(gap.dropped_max, 0.0);
    }

    #[test]
    fn gray_zone_is_rejected() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![re(1.0), re(5e-8)]));
        assert!(matches!(kernel_basis(&m, 1e-8, 10.0, 1.0, "t"), Err(Error::RankAmbiguous { .. })));
    }

    #[test]
    fn restricted_inverse() {
        let q = CMat::from_column_slice(3, 1, &[re(0.0), re(1.0), re(0.0)]);
        let x = CMat::from_diagonal(&CVec::from_vec(vec![re(7.0), re(4.0), re(9.0)]));
        let inv = inverse_on(&q, &x).unwrap();
        assert!((inv[(1, 1)] - re(0.25)).norm() < 1e-15);
        assert_eq!(inv[(0, 0)], re(0.0));
    }
}
