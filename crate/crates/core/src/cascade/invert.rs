//! Iterated inversion of A(z) = A0 + z·A1(z) around a singular A0.

use crate::linalg::{identity, inverse, inverse_on, max_abs, spectral_norm, svd, CMat, C64};
use crate::tol::Tolerances;
use crate::{Error, Result};

/// left · Σ_{j≥0} (−z)^j X^{j+p} · right, truncated once a term drops below
/// `series_tol` relative to the running sum.
pub(crate) fn neumann(left: &CMat, x: &CMat, right: &CMat, z: C64, p: usize, tol: &Tolerances) -> Result<CMat> {
    let n = x.nrows();
    let mut q = identity(n);
    for _ in 0..p {
        q = x * q;
    }
    if z.norm() == 0.0 {
        return Ok(left * q * right);
    }
    let zx = x * (-z);
    let ratio = spectral_norm(&zx);
    if ratio >= 1.0 {
        return Err(Error::SeriesDiverged { norm: ratio });
    }
    let mut sum = q.clone();
    for _ in 1..tol.series_max_terms {
        q = &zx * q;
        let t = q.norm();
        sum += &q;
        if t <= tol.series_tol * sum.norm().max(1e-300) {
            return Ok(left * sum * right);
        }
    }
    Err(Error::SeriesDiverged { norm: ratio })
}

/// Orthonormal basis of the range of an orthogonal projection.
pub(crate) fn range_basis(s: &CMat) -> CMat {
    let (u, sig, _) = svd(s);
    let r = sig.iter().filter(|&&x| x > 0.5).count();
    u.columns(0, r).into_owned()
}

/// Output of [`jn_invert`].
#[derive(Debug, Clone)]
pub struct JnInverse {
    /// B(z) acting in ran S (extended by zero).
    pub b: CMat,
    pub inverse: CMat,
    /// ‖A(z)·A(z)⁻¹ − 1‖_max.
    pub residual: f64,
}

/// Inverts A(z) = A0 + z·A1 through the reduced operator
/// B(z) = S(A0+S)⁻¹ Σ_j (−z)^j (A1(A0+S)⁻¹)^{j+1} S on ran S:
///
/// A(z)⁻¹ = (A(z)+S)⁻¹ + z⁻¹ (A(z)+S)⁻¹ S B(z)⁻¹ S (A(z)+S)⁻¹.
///
/// `a1` is A1 already evaluated at z.
pub fn jn_invert(a0: &CMat, a1: &CMat, s: &CMat, z: C64, tol: &Tolerances) -> Result<JnInverse> {
    if z.norm() == 0.0 {
        return Err(Error::InvalidInput("jn_invert needs z ≠ 0".into()));
    }
    let g = inverse(&(a0 + s))?;
    let compat = max_abs(&(s * &g * s - s));
    if compat > 1e-10 * (1.0 + max_abs(s)) {
        return Err(Error::Incompatible { residual: compat });
    }
    let x = a1 * &g;
    let b = neumann(&(s * &g), &x, s, z, 1, tol)?;
    let q = range_basis(s);
    let b_inv = inverse_on(&q, &b)?;
    let a = a0 + a1 * z;
    let as_inv = inverse(&(&a + s))?;
    let inv = &as_inv + &as_inv * b_inv * &as_inv / z;
    let residual = max_abs(&(&a * &inv - identity(a.nrows())));
    Ok(JnInverse { b, inverse: inv, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, re, CVec};

    #[test]
    fn scalar_pencil() {
        let z = c(0.3, -0.1);
        let one = CMat::from_element(1, 1, re(1.0));
        let out = jn_invert(&CMat::zeros(1, 1), &one, &one, z, &Tolerances::default()).unwrap();
        assert!((out.b[(0, 0)] - re(1.0) / (z + 1.0)).norm() < 1e-14);
        assert!((out.inverse[(0, 0)] - re(1.0) / z).norm() < 1e-14);
    }

    #[test]
    fn diagonal_pencil() {
        let a0 = CMat::from_diagonal(&CVec::from_vec(vec![re(1.0), re(0.0)]));
        let s = CMat::from_diagonal(&CVec::from_vec(vec![re(0.0), re(1.0)]));
        let out = jn_invert(&a0, &identity(2), &s, re(0.1), &Tolerances::default()).unwrap();
        assert!((out.inverse[(0, 0)] - re(1.0 / 1.1)).norm() < 1e-12);
        assert!((out.inverse[(1, 1)] - re(10.0)).norm() < 1e-12);
        assert!(out.inverse[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn divergent_series_is_reported() {
        let one = CMat::from_element(1, 1, re(1.0));
        let r = jn_invert(&CMat::zeros(1, 1), &one, &one, re(2.0), &Tolerances::default());
        assert!(matches!(r, Err(Error::SeriesDiverged { .. })));
    }
}
