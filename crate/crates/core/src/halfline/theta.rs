//! Numerical checks of the two half-line identities used for the wave
//! operators: the z-integral Θ against 2π R̄(−A₊), and the propagation
//! limit of f(A₊) along the Neumann evolution.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cosine_transform, dilation_calculus, peaked_quad, Bump, HalfLineGrid, RFunction};
use crate::quad::extrapolate_to_zero;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaReport {
    pub eps: Vec<f64>,
    /// Relative L² defect of the regularized left side at each ε.
    pub raw_defects: Vec<f64>,
    /// Relative L² defect after extrapolating to ε = 0.
    pub defect: f64,
    pub rhs_norm: f64,
}

/// Θ_ε η(x) = 2x ∫₀^∞ η(y) ∫₀^∞ e^{i(y²−x²)z − εz} dz dy.
///
/// The z-integral is done in closed form, 1/(ε − i(y²−x²)); the part beyond
/// `z_max` is dropped, which is only admissible when e^{−ε z_max}/ε is
/// negligible, so that is checked instead of computed.
fn theta_eps(grid: &HalfLineGrid, bump: &Bump, eps: f64) -> Vec<C64> {
    let (a, b) = bump.support();
    grid.x
        .par_iter()
        .map(|&x| {
            let width = eps / (2.0 * x);
            let v = peaked_quad(a, b, x, width, |y| C64::new(bump.eval(y), 0.0) / C64::new(eps, x * x - y * y));
            v * (2.0 * x)
        })
        .collect()
}

/// Compares Θη with 2π R̄(−A₊)η for a bump η, extrapolating the damping
/// ε → 0 through the given values.
pub fn theta_identity_check(grid: &HalfLineGrid, bump: &Bump, eps: &[f64], z_max: f64) -> Result<ThetaReport> {
    if eps.len() < 2 || eps.iter().any(|e| *e <= 0.0) {
        return Err(Error::InvalidInput("need at least two positive regularization values".into()));
    }
    let e_min = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let tail = (-e_min * z_max).exp() / e_min;
    if tail > 1e-12 {
        return Err(Error::Quadrature(format!("z-cutoff {z_max} leaves a tail of {tail:.2e} at ε = {e_min}")));
    }
    let (a, _) = bump.support();
    if a <= grid.x[0] || bump.support().1 >= grid.x[grid.len() - 1] {
        return Err(Error::InvalidInput("bump support is not inside the grid".into()));
    }
    let eta = grid.sample(|x| C64::new(bump.eval(x), 0.0));
    let r = RFunction;
    let rhs: Vec<C64> = dilation_calculus(grid, |xi| r.reflected_conj(xi), &eta)?.into_iter().map(|z| z * (2.0 * PI)).collect();
    let rhs_norm = grid.norm(&rhs);
    let lhs: Vec<Vec<C64>> = eps.iter().map(|&e| theta_eps(grid, bump, e)).collect();
    let rel = |v: &[C64]| if rhs_norm == 0.0 { grid.norm(v) } else { grid.distance(v, &rhs) / rhs_norm };
    let raw_defects: Vec<f64> = lhs.iter().map(|v| rel(v)).collect();
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&i, &j| eps[j].total_cmp(&eps[i]));
    if order.windows(2).any(|w| raw_defects[w[1]] > raw_defects[w[0]] * (1.0 + 1e-9) + 1e-14) {
        return Err(Error::Quadrature(format!("Θ defect does not decrease with ε: {raw_defects:?}")));
    }
    let extrap: Vec<C64> =
        (0..grid.len()).map(|j| extrapolate_to_zero(eps, &lhs.iter().map(|v| v[j]).collect::<Vec<_>>())).collect();
    Ok(ThetaReport { eps: eps.to_vec(), raw_defects, defect: rel(&extrap), rhs_norm })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayCurve {
    pub t: Vec<f64>,
    pub d: Vec<f64>,
    /// First time at which the wavepacket left the grid, if any.
    pub truncated_at: Option<f64>,
}

/// d(t) = ‖e^{itH} f(A₊) e^{−itH} φ − f_{sign t} φ‖ with H = −Δ_N.
///
/// Conjugating by F_c turns H into multiplication by y² and A₊ into −A₊,
/// so d(t) = ‖f(−A₊)χ_t − f_{sign t}χ_t‖ with χ_t = e^{−ity²}F_cφ, which
/// avoids evolving back and forth on the grid.
pub fn appendix_limit_check<F>(grid: &HalfLineGrid, f: F, limits: (C64, C64), phi: &[C64], ts: &[f64]) -> Result<DecayCurve>
where
    F: Fn(f64) -> C64 + Sync,
{
    let psi = cosine_transform(grid, phi)?;
    let results: Vec<Result<f64>> = ts
        .par_iter()
        .map(|&t| {
            let chi: Vec<C64> = psi.iter().zip(&grid.x).map(|(z, y)| z * C64::from_polar(1.0, -t * y * y)).collect();
            let out = dilation_calculus(grid, |xi| f(-xi), &chi)?;
            let lim = if t > 0.0 { limits.1 } else { limits.0 };
            let target: Vec<C64> = chi.iter().map(|z| z * lim).collect();
            Ok(grid.distance(&out, &target))
        })
        .collect();
    let mut curve = DecayCurve { t: Vec::new(), d: Vec::new(), truncated_at: None };
    for (&t, r) in ts.iter().zip(results) {
        match r {
            Ok(d) => {
                curve.t.push(t);
                curve.d.push(d);
            }
            Err(Error::GridEscape { .. }) => {
                curve.truncated_at = Some(curve.truncated_at.map_or(t, |s: f64| if s.abs() < t.abs() { s } else { t }));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(curve)
}
