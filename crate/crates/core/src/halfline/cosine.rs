//! The unitary cosine transform on the geometric grid, the Neumann
//! evolution it diagonalizes, and the fiber spectral representation U_k.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HalfLineGrid;
use crate::fiber::FiberContext;
use crate::quad::gauss_legendre_on;
use crate::{Error, Result};

const ENDPOINT_TOL: f64 = 1e-8;
const ALIAS_TOL: f64 = 1e-6;

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest node where |η| exceeds `rel` times its maximum.
fn effective_extent(grid: &HalfLineGrid, eta: &[C64], rel: f64) -> f64 {
    let cut = rel * max_abs(eta);
    eta.iter().zip(&grid.x).rev().find(|(z, _)| z.norm() > cut).map_or(grid.x[0], |(_, x)| *x)
}

fn check_resolved(grid: &HalfLineGrid, eta: &[C64]) -> Result<()> {
    if eta.len() != grid.len() {
        return Err(Error::InvalidInput("grid function has the wrong length".into()));
    }
    let m = max_abs(eta);
    if m > 0.0 && eta[eta.len() - 1].norm() > ENDPOINT_TOL * m {
        return Err(Error::GridEscape { what: "cosine transform input at the right end".into(), energy: eta[eta.len() - 1].norm() / m });
    }
    Ok(())
}

/// Largest y for which the s-trapezoid rule resolves cos(yx) on the support of η.
pub fn resolved_frequency(grid: &HalfLineGrid, eta: &[C64]) -> f64 {
    PI / (2.0 * effective_extent(grid, eta, ENDPOINT_TOL) * grid.ds)
}

/// √(2/π) ∫ cos(yx) η(x) dx at a single y; zero beyond the resolved frequency.
pub fn cosine_transform_at(grid: &HalfLineGrid, eta: &[C64], y: f64) -> C64 {
    if y > resolved_frequency(grid, eta) {
        return C64::new(0.0, 0.0);
    }
    let mut acc = C64::new(0.0, 0.0);
    for ((z, x), w) in eta.iter().zip(&grid.x).zip(&grid.w) {
        if *z != C64::new(0.0, 0.0) {
            acc += z * (w * (y * x).cos());
        }
    }
    acc * (2.0 / PI).sqrt()
}

/// (F_c η)(y) = √(2/π) ∫₀^∞ cos(yx) η(x) dx, sampled back on the grid nodes.
///
/// The quadrature is the trapezoidal rule in s = ln x, which resolves the
/// oscillation cos(yx) as long as y·x·Δs stays well below π on the support
/// of η. Above that frequency the output is set to zero; energy
/// within a factor 4 below it signals that the transform had not decayed.
pub fn cosine_transform(grid: &HalfLineGrid, eta: &[C64]) -> Result<Vec<C64>> {
    check_resolved(grid, eta)?;
    let y_cut = resolved_frequency(grid, eta);
    let nz: Vec<(f64, C64)> =
        eta.iter().zip(&grid.x).zip(&grid.w).filter(|((z, _), _)| z.norm() > 0.0).map(|((z, x), w)| (*x, z * w)).collect();
    let c = (2.0 / PI).sqrt();
    let out: Vec<C64> = grid
        .x
        .par_iter()
        .map(|&y| {
            if y > y_cut {
                return C64::new(0.0, 0.0);
            }
            let mut acc = C64::new(0.0, 0.0);
            for (x, zw) in &nz {
                acc += zw * (y * x).cos();
            }
            acc * c
        })
        .collect();
    let total: f64 = out.iter().zip(&grid.w).map(|(z, w)| z.norm_sqr() * w).sum();
    let high: f64 = out.iter().zip(&grid.x).zip(&grid.w).filter(|((_, y), _)| **y > 0.25 * y_cut).map(|((z, _), w)| z.norm_sqr() * w).sum();
    if total > 0.0 && high / total > ALIAS_TOL {
        return Err(Error::GridEscape { what: "cosine transform aliasing".into(), energy: high / total });
    }
    Ok(out)
}

/// e^{−it(−Δ_N)}φ = F_c e^{−ity²} F_c φ.
pub fn neumann_evolution(grid: &HalfLineGrid, phi: &[C64], t: f64) -> Result<Vec<C64>> {
    if t == 0.0 {
        check_resolved(grid, phi)?;
        return Ok(phi.to_vec());
    }
    let psi = cosine_transform(grid, phi)?;
    let y_eff = effective_extent(grid, &psi, ENDPOINT_TOL);
    // per-step phase increment of e^{−ity²} in s = ln y
    let step = 2.0 * t.abs() * y_eff * y_eff * grid.ds;
    if step > PI / 2.0 {
        return Err(Error::GridEscape { what: format!("evolution phase at t = {t}"), energy: step });
    }
    let chi: Vec<C64> = psi.iter().zip(&grid.x).map(|(z, y)| z * C64::from_polar(1.0, -t * y * y)).collect();
    cosine_transform(grid, &chi)
}

/// A function on R₊ × T given by finitely many Fourier modes, each a
/// half-line grid function.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ModeFunction {
    pub modes: Vec<(i64, Vec<C64>)>,
}

impl ModeFunction {
    pub fn mode(&self, n: i64) -> Option<&[C64]> {
        self.modes.iter().find(|(m, _)| *m == n).map(|(_, v)| v.as_slice())
    }

    pub fn norm(&self, grid: &HalfLineGrid) -> f64 {
        self.modes.iter().map(|(_, v)| grid.norm(v).powi(2)).sum::<f64>().sqrt()
    }

    /// H⁰_k φ = (n+k)²φ_n − φ_n'' mode by mode. Second derivatives come
    /// from five-point differences in s: φ'' = e^{−2s}(g_ss − g_s), g(s) = φ(e^s).
    pub fn apply_free(&self, grid: &HalfLineGrid, fiber: &FiberContext) -> Self {
        let h = grid.ds;
        let modes = self
            .modes
            .iter()
            .map(|(n, g)| {
                let len = g.len();
                let mut d2 = vec![C64::new(0.0, 0.0); len];
                for j in 2..len - 2 {
                    let gs = (g[j - 2] - g[j - 1] * 8.0 + g[j + 1] * 8.0 - g[j + 2]) / (12.0 * h);
                    let gss = (-g[j - 2] + g[j - 1] * 16.0 - g[j] * 30.0 + g[j + 1] * 16.0 - g[j + 2]) / (12.0 * h * h);
                    d2[j] = (gss - gs) / (grid.x[j] * grid.x[j]);
                }
                d2[0] = d2[2];
                d2[1] = d2[2];
                d2[len - 1] = d2[len - 3];
                d2[len - 2] = d2[len - 3];
                let l = fiber.threshold(*n);
                (*n, g.iter().zip(&d2).map(|(v, d)| v * l - d).collect())
            })
            .collect();
        Self { modes }
    }
}

/// (U_k φ)_n(λ) = 2^{−1/2}(λ−λ_n)^{−1/4}(F_c φ_n)(√(λ−λ_n)).
pub fn u_transform(grid: &HalfLineGrid, fiber: &FiberContext, phi: &ModeFunction, n: i64, lambda: f64) -> Result<C64> {
    let l = fiber.threshold(n);
    if lambda <= l {
        return Err(Error::InvalidInput(format!("λ = {lambda} is not above the channel threshold {l}")));
    }
    let Some(g) = phi.mode(n) else {
        return Ok(C64::new(0.0, 0.0));
    };
    check_resolved(grid, g)?;
    let d = lambda - l;
    Ok(cosine_transform_at(grid, g, d.sqrt()) * (0.5f64.sqrt() * d.powf(-0.25)))
}

/// |Σ_n ∫|(U_kφ)_n|² dλ − ‖φ‖²| / ‖φ‖², with λ = λ_n + (t/(1−t))².
pub fn plancherel_defect(grid: &HalfLineGrid, fiber: &FiberContext, phi: &ModeFunction, nodes: usize) -> Result<f64> {
    let norm2 = phi.norm(grid).powi(2);
    if norm2 == 0.0 {
        return Ok(0.0);
    }
    let (ts, ws) = gauss_legendre_on(nodes, 0.0, 1.0);
    let mut total = 0.0;
    for (n, _) in &phi.modes {
        let l = fiber.threshold(*n);
        for (t, w) in ts.iter().zip(&ws) {
            let y = t / (1.0 - t);
            let jac = 2.0 * y / (1.0 - t).powi(2);
            total += u_transform(grid, fiber, phi, *n, l + y * y)?.norm_sqr() * jac * w;
        }
    }
    Ok((total - norm2).abs() / norm2)
}

/// max |U(H⁰φ)_n(λ) − λ(Uφ)_n(λ)| over the given samples, relative to max |λ(Uφ)_n(λ)|.
pub fn multiplication_residual(grid: &HalfLineGrid, fiber: &FiberContext, phi: &ModeFunction, samples: &[(i64, f64)]) -> Result<f64> {
    let hphi = phi.apply_free(grid, fiber);
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for &(n, lambda) in samples {
        let a = u_transform(grid, fiber, &hphi, n, lambda)?;
        let b = u_transform(grid, fiber, phi, n, lambda)? * lambda;
        num = num.max((a - b).norm());
        den = den.max(b.norm());
    }
    Ok(if den == 0.0 { num } else { num / den })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(g: &HalfLineGrid) -> Vec<C64> {
        g.sample(|x| C64::new((-x * x / 2.0).exp(), 0.0))
    }

    // Gaussian bump at x = 1, symmetrized so that its even extension is smooth
    fn bump(g: &HalfLineGrid) -> Vec<C64> {
        g.sample(|x| C64::new((-(x - 1.0f64).powi(2) / 0.08).exp() + (-(x + 1.0f64).powi(2) / 0.08).exp(), 0.0))
    }

    #[test]
    fn gaussian_is_fixed() {
        let g = HalfLineGrid::default();
        let eta = gaussian(&g);
        let f = cosine_transform(&g, &eta).unwrap();
        assert!(g.distance(&f, &eta) < 1e-10);
    }

    #[test]
    fn involutive_and_unitary_on_bump() {
        let g = HalfLineGrid::default();
        let eta = bump(&g);
        let f = cosine_transform(&g, &eta).unwrap();
        assert!((g.norm(&f) - g.norm(&eta)).abs() < 1e-8 * g.norm(&eta));
        let ff = cosine_transform(&g, &f).unwrap();
        assert!(g.distance(&ff, &eta) < 1e-8 * g.norm(&eta));
    }

    #[test]
    fn unresolved_input_is_rejected() {
        let g = HalfLineGrid::default();
        let eta = g.sample(|x| C64::new(1.0 / (1.0 + x * x), 0.0));
        assert!(cosine_transform(&g, &eta).is_err());
    }

    #[test]
    fn evolution_group_law_and_spread() {
        let g = HalfLineGrid::default();
        let phi = gaussian(&g);
        let a = neumann_evolution(&g, &phi, 0.3).unwrap();
        let b = neumann_evolution(&g, &a, 0.5).unwrap();
        let c = neumann_evolution(&g, &phi, 0.8).unwrap();
        assert!((g.norm(&c) - g.norm(&phi)).abs() < 1e-8);
        assert!(g.distance(&b, &c) < 1e-8);
        let spread = |v: &[C64]| -> f64 { v.iter().zip(&g.x).zip(&g.w).map(|((z, x), w)| z.norm_sqr() * x * x * w).sum() };
        assert!(spread(&a) > spread(&phi) && spread(&c) > spread(&a));
    }

    #[test]
    fn u_transform_plancherel_and_diagonalization() {
        let g = HalfLineGrid::default();
        let fiber = FiberContext::new(0.2, 8).unwrap();
        let phi = ModeFunction { modes: vec![(0, gaussian(&g)), (-1, bump(&g))] };
        assert!(plancherel_defect(&g, &fiber, &phi, 400).unwrap() < 1e-6);
        let samples: Vec<(i64, f64)> = [(0, 0.3), (0, 1.7), (-1, 0.9), (-1, 2.5)].to_vec();
        assert!(multiplication_residual(&g, &fiber, &phi, &samples).unwrap() < 1e-5);
        assert_eq!(u_transform(&g, &fiber, &phi, 2, 5.0).unwrap(), C64::new(0.0, 0.0));
        assert!(u_transform(&g, &fiber, &phi, 0, 0.01).is_err());
    }
}
