//! Analysis on the half-line R₊: the cosine transform, functions of the
//! dilation generator A₊ through the Mellin transform, the Neumann
//! evolution, and the identities relating them to the function R.

mod cosine;
mod mellin;
mod theta;

pub use cosine::{
    cosine_transform, cosine_transform_at, multiplication_residual, neumann_evolution, plancherel_defect, u_transform, ModeFunction,
};
pub use mellin::dilation_calculus;
pub use theta::{appendix_limit_check, theta_identity_check, DecayCurve, ThetaReport};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::quad::gauss_legendre_on;

/// Geometric grid x_j = e^{s_j}, s_j uniform on [s_min, s_max].
#[derive(Debug, Clone)]
pub struct HalfLineGrid {
    pub s_min: f64,
    pub s_max: f64,
    pub ds: f64,
    pub x: Vec<f64>,
    /// L²(R₊, dx) weights: trapezoidal in s, plus x₀ on the first node for [0, x₀].
    pub w: Vec<f64>,
}

impl Default for HalfLineGrid {
    fn default() -> Self {
        Self::new(-12.0, 12.0, 4096)
    }
}

impl HalfLineGrid {
    pub fn new(s_min: f64, s_max: f64, len: usize) -> Self {
        assert!(len >= 16 && s_max > s_min, "degenerate half-line grid");
        let ds = (s_max - s_min) / (len - 1) as f64;
        let x: Vec<f64> = (0..len).map(|j| (s_min + ds * j as f64).exp()).collect();
        let mut w: Vec<f64> = x.iter().map(|x| x * ds).collect();
        w[0] = x[0] * (1.0 + 0.5 * ds);
        w[len - 1] *= 0.5;
        Self { s_min, s_max, ds, x, w }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn s(&self, j: usize) -> f64 {
        self.s_min + self.ds * j as f64
    }

    pub fn sample<F: Fn(f64) -> C64>(&self, f: F) -> Vec<C64> {
        self.x.iter().map(|&x| f(x)).collect()
    }

    pub fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).zip(&self.w).map(|((a, b), w)| a.conj() * b * w).sum()
    }

    pub fn norm(&self, a: &[C64]) -> f64 {
        a.iter().zip(&self.w).map(|(a, w)| a.norm_sqr() * w).sum::<f64>().sqrt()
    }

    pub fn distance(&self, a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).zip(&self.w).map(|((a, b), w)| (a - b).norm_sqr() * w).sum::<f64>().sqrt()
    }
}

/// R(x) = ½(1 + tanh(πx) + i/cosh(πx)).
#[derive(Debug, Clone, Copy, Default)]
pub struct RFunction;

impl RFunction {
    pub fn eval(&self, x: f64) -> C64 {
        let px = std::f64::consts::PI * x;
        C64::new(0.5 * (1.0 + px.tanh()), 0.5 / px.cosh())
    }

    /// x ↦ conj(R(−x)).
    pub fn reflected_conj(&self, x: f64) -> C64 {
        self.eval(-x).conj()
    }

    pub fn limits(&self) -> (C64, C64) {
        (C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    }
}

/// exp(−1/(1−r²)) on r = (x − center)/half_width ∈ (−1, 1), scaled by `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn new(center: f64, half_width: f64) -> Self {
        Self { center, half_width, amplitude: 1.0 }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = (x - self.center) / self.half_width;
        if r.abs() >= 1.0 {
            0.0
        } else {
            self.amplitude * (-1.0 / (1.0 - r * r)).exp()
        }
    }

    /// x ↦ √a·η(ax).
    pub fn dilated(&self, a: f64) -> Self {
        Self { center: self.center / a, half_width: self.half_width / a, amplitude: self.amplitude * a.sqrt() }
    }

    pub fn shifted(&self, d: f64) -> Self {
        Self { center: self.center + d, ..*self }
    }
}

/// ∫_a^b g(y) dy for integrands with a narrow peak of the given width at y0,
/// using Gauss–Legendre panels refined geometrically around the peak.
pub(crate) fn peaked_quad<F: Fn(f64) -> C64>(a: f64, b: f64, y0: f64, width: f64, g: F) -> C64 {
    let mut cuts = vec![a, b];
    let y0 = y0.clamp(a, b);
    cuts.push(y0);
    let mut d = width / 8.0;
    while d < b - a {
        for c in [y0 - d, y0 + d] {
            if c > a && c < b {
                cuts.push(c);
            }
        }
        d *= 2.0;
    }
    for i in 1..32 {
        cuts.push(a + (b - a) * i as f64 / 32.0);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut sum = C64::new(0.0, 0.0);
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (xs, ws) = gauss_legendre_on(16, w[0], w[1]);
        for (x, wt) in xs.iter().zip(&ws) {
            sum += g(*x) * *wt;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_function_identities() {
        let r = RFunction;
        for i in 0..1000 {
            let x = -10.0 + 20.0 * i as f64 / 999.0;
            let a = r.eval(x);
            let b = r.eval(-x);
            assert!((a + b.conj() - 1.0).norm() < 1e-15);
            assert!((a.norm_sqr() + (C64::new(1.0, 0.0) - a).norm_sqr() - 1.0).abs() < 1e-15);
        }
        assert!((r.eval(40.0) - 1.0).norm() < 1e-15);
        assert!(r.eval(-40.0).norm() < 1e-15);
    }

    #[test]
    fn grid_norm_of_gaussian() {
        let g = HalfLineGrid::default();
        let f = g.sample(|x| C64::new((-x * x / 2.0).exp(), 0.0));
        let exact = (std::f64::consts::PI.sqrt() / 2.0).sqrt();
        assert!((g.norm(&f) - exact).abs() < 1e-8);
    }

    #[test]
    fn peaked_quadrature_of_lorentzian() {
        let eps = 1e-3;
        let v = peaked_quad(-1.0, 1.0, 0.0, eps, |y| C64::new(eps / (eps * eps + y * y), 0.0));
        let exact = 2.0 * (1.0 / eps).atan();
        assert!((v.re - exact).abs() < 1e-10, "{}", v.re - exact);
    }
}
