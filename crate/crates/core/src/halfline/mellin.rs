//! f(A₊) through the Mellin transform g(s) = e^{s/2} φ(e^s), which turns
//! the dilation group e^{iτA₊}φ = e^{τ/2}φ(e^τ ·) into translation by τ, so
//! A₊ becomes −i d/ds and f(A₊) a Fourier multiplier in s.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use super::HalfLineGrid;
use crate::{Error, Result};

const EDGE: usize = 32;

fn edge_energy(g: &[C64]) -> f64 {
    let total: f64 = g.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let n = g.len();
    let e: f64 = g[..EDGE].iter().chain(&g[n - EDGE..]).map(|z| z.norm_sqr()).sum();
    e / total
}

/// f(A₊)φ on the grid. The input must be resolved inside the s-window
/// (relative energy in the outer samples ≤ 1e-6); the transform is zero
/// padded to twice the window so that the multiplier does not wrap around.
pub fn dilation_calculus<F: Fn(f64) -> C64>(grid: &HalfLineGrid, f: F, phi: &[C64]) -> Result<Vec<C64>> {
    let n = grid.len();
    if phi.len() != n {
        return Err(Error::InvalidInput("grid function has the wrong length".into()));
    }
    let mut g: Vec<C64> = phi.iter().zip(&grid.x).map(|(p, x)| p * x.sqrt()).collect();
    let esc = edge_energy(&g);
    if esc > 1e-6 {
        return Err(Error::GridEscape { what: "Mellin transform input".into(), energy: esc });
    }
    let big = (2 * n).next_power_of_two();
    g.resize(big, C64::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(big).process(&mut g);
    let dxi = 2.0 * std::f64::consts::PI / (big as f64 * grid.ds);
    for (k, z) in g.iter_mut().enumerate() {
        let kk = if k < big / 2 { k as f64 } else { k as f64 - big as f64 };
        *z *= f(kk * dxi);
    }
    planner.plan_fft_inverse(big).process(&mut g);
    let scale = 1.0 / big as f64;
    Ok(g[..n].iter().zip(&grid.x).map(|(z, x)| z * scale / x.sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfline::RFunction;

    fn packet(grid: &HalfLineGrid, xi0: f64) -> Vec<C64> {
        // x^{-1/2 + iξ₀} times a Gaussian in ln x
        grid.sample(|x| {
            let s = x.ln();
            C64::from_polar((-(s * s) / 2.0).exp() / x.sqrt(), xi0 * s)
        })
    }

    #[test]
    fn identity_multiplier() {
        let g = HalfLineGrid::default();
        let phi = packet(&g, 1.5);
        let out = dilation_calculus(&g, |_| C64::new(1.0, 0.0), &phi).unwrap();
        assert!(g.distance(&out, &phi) < 1e-12);
    }

    #[test]
    fn generator_matches_finite_difference() {
        let g = HalfLineGrid::default();
        let xi0 = 1.5;
        let phi = packet(&g, xi0);
        let out = dilation_calculus(&g, |x| C64::new(x, 0.0), &phi).unwrap();
        // A₊φ = −i(xφ' + φ/2), φ' by central differences in x
        let f = |x: f64| {
            let s = x.ln();
            C64::from_polar((-(s * s) / 2.0).exp() / x.sqrt(), xi0 * s)
        };
        let mut worst = 0.0f64;
        for j in (1000..3000).step_by(97) {
            let x = g.x[j];
            let h = 1e-5 * x;
            let d = (f(x + h) - f(x - h)) / (2.0 * h);
            let a = C64::new(0.0, -1.0) * (d * x + f(x) * 0.5);
            worst = worst.max((a - out[j]).norm() * x.sqrt());
        }
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn contraction_for_r() {
        let g = HalfLineGrid::default();
        let phi = packet(&g, -0.7);
        let out = dilation_calculus(&g, |x| RFunction.eval(x), &phi).unwrap();
        assert!(g.norm(&out) <= g.norm(&phi) + 1e-8);
    }

    #[test]
    fn escaping_input_is_rejected() {
        let g = HalfLineGrid::default();
        let phi = g.sample(|x| C64::new(1.0 / (1.0 + x), 0.0));
        assert!(matches!(dilation_calculus(&g, |_| C64::new(1.0, 0.0), &phi), Err(Error::GridEscape { .. })));
    }
}
