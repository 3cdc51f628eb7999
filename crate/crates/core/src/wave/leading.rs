//! The leading term (1⊗f(A₊)) in the spectral representation, and the
//! check of its integral formula for f = R̄.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ChannelData, TestState};
use crate::fiber::FiberContext;
use crate::halfline::{dilation_calculus, peaked_quad, HalfLineGrid, RFunction};
use crate::problem::FiberProblem;
use crate::quad::extrapolate_to_zero;
use crate::{Error, Result};

/// F_c of the half-line factor of U_k*η in channel n:
/// ψ(y) = 2^{1/2} y^{1/2} η_n(y² + λ_n).
fn half_line_image<D: ChannelData + ?Sized>(grid: &HalfLineGrid, fiber: &FiberContext, data: &D, n: i64) -> Result<Vec<C64>> {
    let ln = fiber.threshold(n);
    let sup = data.supports(n);
    grid.x
        .iter()
        .map(|&y| {
            let l = ln + y * y;
            if sup.iter().any(|s| l >= s.0 && l <= s.1) {
                Ok(data.value(n, l)? * (2.0 * y).sqrt())
            } else {
                Ok(C64::new(0.0, 0.0))
            }
        })
        .collect()
}

/// Channel norms of U_k(1⊗f(A₊))U_k* η. Under F_c the generator A₊ changes
/// sign, so each channel is f(−A₊) applied to its half-line image.
pub fn leading_term<D, F>(grid: &HalfLineGrid, p: &FiberProblem, data: &D, f: F) -> Result<Vec<(i64, f64)>>
where
    D: ChannelData + ?Sized,
    F: Fn(f64) -> C64 + Sync,
{
    data.channels()
        .par_iter()
        .map(|&n| {
            let psi = half_line_image(grid, &p.fiber, data, n)?;
            if psi.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                return Ok((n, 0.0));
            }
            let out = dilation_calculus(grid, |x| f(-x), &psi)?;
            Ok((n, grid.norm(&out)))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().filter(|c| c.1 > 0.0).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeadingIdentityReport {
    pub n: i64,
    pub eps: Vec<f64>,
    pub raw_defects: Vec<f64>,
    pub defect: f64,
    pub lhs_norm: f64,
}

/// Compares 2π(U_k(1⊗R̄(A₊))U_k*ζ)_n(λ) with the damped integral
/// β_n(λ) ∫ ζ_n(μ) β_n(μ)⁻¹ / (ε − i(μ−λ)) dμ, extrapolated to ε = 0, in
/// L²(dλ) over λ = λ_n + y² on the grid.
pub fn leading_term_identity_check(grid: &HalfLineGrid, fiber: &FiberContext, zeta: &TestState, n: i64, eps: &[f64]) -> Result<LeadingIdentityReport> {
    if eps.len() < 2 || eps.iter().any(|e| *e <= 0.0) {
        return Err(Error::InvalidInput("need at least two positive regularization values".into()));
    }
    let ln = fiber.threshold(n);
    let sup = zeta.supports(n);
    if sup.iter().any(|s| s.0 <= ln) {
        return Err(Error::InvalidInput(format!("ζ_{n} is not supported above λ_{n}")));
    }
    let psi = half_line_image(grid, fiber, zeta, n)?;
    let r = RFunction;
    // R̄(A₊) on the x-side is R̄(−A₊) on ψ
    let rbar = dilation_calculus(grid, |x| r.reflected_conj(x), &psi)?;
    let lhs: Vec<C64> = rbar.iter().zip(&grid.x).map(|(z, y)| z * (2.0 * PI) / (2.0 * y).sqrt()).collect();
    // L²(dλ) weights: dλ = 2y dy
    let wl: Vec<f64> = grid.w.iter().zip(&grid.x).map(|(w, y)| 2.0 * y * w).collect();
    let dist = |a: &[C64], b: &[C64]| a.iter().zip(b).zip(&wl).map(|((a, b), w)| (a - b).norm_sqr() * w).sum::<f64>().sqrt();
    let lhs_norm = dist(&lhs, &vec![C64::new(0.0, 0.0); lhs.len()]);
    let rhs: Vec<Vec<C64>> = eps
        .iter()
        .map(|&e| {
            grid.x
                .par_iter()
                .map(|&y| {
                    let l = ln + y * y;
                    let mut acc = C64::new(0.0, 0.0);
                    for &(a, b) in &sup {
                        acc += peaked_quad(a, b, l, e, |mu| {
                            let z = zeta.value(n, mu).unwrap_or_default();
                            z / (fiber.beta(n, mu) * C64::new(e, l - mu))
                        });
                    }
                    acc * fiber.beta(n, l)
                })
                .collect()
        })
        .collect();
    let rel = |v: &[C64]| if lhs_norm == 0.0 { dist(v, &lhs) } else { dist(v, &lhs) / lhs_norm };
    let raw_defects: Vec<f64> = rhs.iter().map(|v| rel(v)).collect();
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&i, &j| eps[j].total_cmp(&eps[i]));
    if order.windows(2).any(|w| raw_defects[w[1]] > raw_defects[w[0]] * (1.0 + 1e-9) + 1e-14) {
        return Err(Error::Quadrature(format!("defect does not decrease with ε: {raw_defects:?}")));
    }
    let extrap: Vec<C64> = (0..grid.len()).map(|j| extrapolate_to_zero(eps, &rhs.iter().map(|v| v[j]).collect::<Vec<_>>())).collect();
    Ok(LeadingIdentityReport { n, eps: eps.to_vec(), raw_defects, defect: rel(&extrap), lhs_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfline::Bump;

    const EPS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

    #[test]
    fn identity_on_bump_and_translate() {
        let g = HalfLineGrid::default();
        let f = FiberContext::new(0.2, 8).unwrap();
        let ln = f.threshold(0);
        let a = leading_term_identity_check(&g, &f, &TestState::single(0, Bump::new(ln + 2.0, 1.0)), 0, &EPS).unwrap();
        assert!(a.defect < 1e-3, "{a:?}");
        let b = leading_term_identity_check(&g, &f, &TestState::single(0, Bump::new(ln + 4.0, 1.0)), 0, &EPS).unwrap();
        assert!(b.defect < 1e-3 && b.defect < 3.0 * a.defect.max(1e-6), "{b:?} vs {a:?}");
    }

    #[test]
    fn zero_state() {
        let g = HalfLineGrid::default();
        let f = FiberContext::new(0.2, 8).unwrap();
        let z = TestState::single(0, Bump { amplitude: 0.0, ..Bump::new(2.0, 1.0) });
        let r = leading_term_identity_check(&g, &f, &z, 0, &EPS).unwrap();
        assert_eq!(r.defect, 0.0);
        assert_eq!(r.lhs_norm, 0.0);
    }
}
