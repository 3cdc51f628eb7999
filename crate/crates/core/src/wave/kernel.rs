//! The kernels B_{nn'}(λ) = β_n(λ)⁻² w_n* M_k(λ,0) w_{n'} and
//! C_{nn'}(μ,λ) = β_n(λ)² β_n(μ)⁻¹ β_{n'}(λ)⁻¹ / (π(μ−λ)).

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::birman_schwinger::m_operator;
use crate::cascade::{build_eig_expansion, build_threshold_cascade, m_eig, m_threshold, CascadeData, EigExpansion};
use crate::fiber::FiberContext;
use crate::linalg::CMat;
use crate::problem::FiberProblem;
use crate::quad::{extrapolate_to_zero, gauss_legendre_on};
use crate::spectral::find_eigenvalues;
use crate::{Error, Result};

/// Step of the Richardson sequence κ ∈ {4h, 2h, h} used at special points.
pub const LIMIT_STEP: f64 = 1e-4;
/// Largest distance to a special point at which the expansion is used.
const NEAR: f64 = 1e-3;

fn check_pair(p: &FiberProblem, n: i64, np: i64) -> Result<(f64, f64)> {
    p.check_in_basis(n)?;
    p.check_in_basis(np)?;
    let (lo, hi) = (p.fiber.threshold(np), p.fiber.threshold(n));
    if lo >= hi {
        return Err(Error::InvalidInput(format!("need λ_{np} < λ_{n}, got {lo} ≥ {hi}")));
    }
    Ok((lo, hi))
}

pub(crate) fn sandwich(p: &FiberProblem, m: &CMat, n: i64, np: i64) -> C64 {
    let a = p.w(n);
    let b = p.w(np);
    (a.adjoint() * m * b)[(0, 0)]
}

/// A point of τ_k ∪ σ_p inside a channel interval, with its expansion data.
#[derive(Debug, Clone)]
pub enum SpecialPoint {
    Threshold(Box<CascadeData>),
    Eigenvalue(Box<EigExpansion>),
}

impl SpecialPoint {
    pub fn lambda(&self) -> f64 {
        match self {
            Self::Threshold(cd) => cd.lambda,
            Self::Eigenvalue(ex) => ex.lambda,
        }
    }

    fn reach(&self) -> f64 {
        match self {
            Self::Threshold(cd) => (0.5 * cd.radius).powi(2).min(NEAR),
            Self::Eigenvalue(_) => NEAR,
        }
    }

    /// M_k(λ₀ − κ²) through the local expansion.
    fn m(&self, p: &FiberProblem, kappa: C64) -> Result<CMat> {
        match self {
            Self::Threshold(cd) => m_threshold(p, cd, kappa),
            Self::Eigenvalue(ex) => m_eig(p, ex, kappa),
        }
    }

    pub fn build(p: &FiberProblem, lambda: f64, threshold: bool) -> Result<Self> {
        Ok(if threshold {
            Self::Threshold(Box::new(build_threshold_cascade(p, lambda)?))
        } else {
            Self::Eigenvalue(Box::new(build_eig_expansion(p, lambda)?))
        })
    }
}

/// κ with λ = λ₀ − κ², on the side of λ₀ where λ lies.
fn kappa_for(lambda0: f64, lambda: f64) -> C64 {
    if lambda <= lambda0 {
        C64::new((lambda0 - lambda).sqrt(), 0.0)
    } else {
        C64::new(0.0, -(lambda - lambda0).sqrt())
    }
}

fn b_near(p: &FiberProblem, sp: &SpecialPoint, n: i64, np: i64, lambda: f64) -> Result<C64> {
    let l0 = sp.lambda();
    let ln = p.fiber.threshold(n);
    let eval = |kappa: C64| -> Result<C64> {
        let lam = l0 - (kappa * kappa).re;
        let m = sp.m(p, kappa)?;
        Ok(sandwich(p, &m, n, np) / (ln - lam).abs().sqrt())
    };
    if lambda != l0 {
        return eval(kappa_for(l0, lambda));
    }
    // at the special point itself: approach from inside the interval
    let right = l0 <= p.fiber.threshold(np);
    let hs = [4.0 * LIMIT_STEP, 2.0 * LIMIT_STEP, LIMIT_STEP];
    let ys: Vec<C64> = hs
        .iter()
        .map(|&h| eval(if right { C64::new(0.0, -h) } else { C64::new(h, 0.0) }))
        .collect::<Result<_>>()?;
    Ok(extrapolate_to_zero(&hs, &ys))
}

/// Precomputed data for one channel pair (n, n') with λ_{n'} < λ_n.
#[derive(Debug, Clone)]
pub struct RemainderKernel {
    pub n: i64,
    pub n_prime: i64,
    pub interval: (f64, f64),
    pub special: Vec<SpecialPoint>,
    /// (λ, B(λ)) on a uniform grid of the closed interval.
    pub samples: Vec<(f64, C64)>,
    pub hs_norm_c: f64,
}

impl RemainderKernel {
    /// `eigenvalues` are the known points of σ_p; those inside the interval
    /// get an expansion. Every threshold in the closed interval gets a cascade.
    pub fn build(p: &FiberProblem, n: i64, np: i64, eigenvalues: &[f64], samples: usize) -> Result<Self> {
        let (lo, hi) = check_pair(p, n, np)?;
        let mut special = Vec::new();
        for t in p.fiber.thresholds_upto(hi) {
            if t.lambda >= lo {
                special.push(SpecialPoint::build(p, t.lambda, true)?);
            }
        }
        for &e in eigenvalues {
            if e > lo && e < hi {
                special.push(SpecialPoint::build(p, e, false)?);
            }
        }
        let mut k = Self { n, n_prime: np, interval: (lo, hi), special, samples: Vec::new(), hs_norm_c: c_hs_norm(&p.fiber, n, np)? };
        let count = samples.max(2);
        k.samples = (0..count)
            .map(|i| {
                let l = lo + (hi - lo) * i as f64 / (count - 1) as f64;
                k.b(p, l).map(|b| (l, b))
            })
            .collect::<Result<_>>()?;
        Ok(k)
    }

    pub fn b(&self, p: &FiberProblem, lambda: f64) -> Result<C64> {
        let (lo, hi) = self.interval;
        if lambda < lo || lambda > hi {
            return Err(Error::InvalidInput(format!("λ = {lambda} outside [{lo}, {hi}]")));
        }
        if let Some(sp) = self.special.iter().find(|sp| (sp.lambda() - lambda).abs() < sp.reach()) {
            return b_near(p, sp, self.n, self.n_prime, lambda);
        }
        let m = m_operator(p, lambda)?;
        Ok(sandwich(p, &m.matrix, self.n, self.n_prime) / p.fiber.beta(self.n, lambda).powi(2))
    }

    pub fn sup_b(&self) -> f64 {
        self.samples.iter().map(|(_, b)| b.norm()).fold(0.0, f64::max)
    }

    pub fn c(&self, fiber: &FiberContext, mu: f64, lambda: f64) -> f64 {
        c_kernel(fiber, self.n, self.n_prime, mu, lambda)
    }
}

/// B_{nn'}(λ) for λ ∈ [λ_{n'}, λ_n]. Near a threshold the cascade expansion
/// is used; near an embedded eigenvalue (detected by a failed direct
/// inversion) the eigenvalue is located and expanded around. At the special
/// points themselves the value is the limit from inside the interval.
pub fn b_kernel(p: &FiberProblem, n: i64, np: i64, lambda: f64) -> Result<C64> {
    let (lo, hi) = check_pair(p, n, np)?;
    if lambda < lo || lambda > hi {
        return Err(Error::InvalidInput(format!("λ = {lambda} outside [{lo}, {hi}]")));
    }
    if p.potential.is_zero() {
        return Ok(C64::new(0.0, 0.0));
    }
    let (dist, thr) = p.fiber.nearest_threshold(lambda);
    if dist < NEAR {
        let sp = SpecialPoint::build(p, thr, true)?;
        if dist < sp.reach() {
            return b_near(p, &sp, n, np, lambda);
        }
    }
    match m_operator(p, lambda) {
        Ok(m) => Ok(sandwich(p, &m.matrix, n, np) / p.fiber.beta(n, lambda).powi(2)),
        Err(Error::NearSingular { .. }) => {
            let rep = find_eigenvalues(p, (lambda - NEAR, lambda + NEAR), NEAR / 64.0)?;
            let e = rep
                .eigenvalues
                .iter()
                .min_by(|a, b| (a.lambda - lambda).abs().total_cmp(&(b.lambda - lambda).abs()))
                .ok_or_else(|| Error::Refinement(lambda))?;
            b_near(p, &SpecialPoint::build(p, e.lambda, false)?, n, np, lambda)
        }
        Err(e) => Err(e),
    }
}

/// C_{nn'}(μ, λ) for μ > λ_n > λ > λ_{n'}.
pub fn c_kernel(fiber: &FiberContext, n: i64, np: i64, mu: f64, lambda: f64) -> f64 {
    fiber.beta(n, lambda).powi(2) / (fiber.beta(n, mu) * fiber.beta(np, lambda) * PI * (mu - lambda))
}

fn hs_quadrature(fiber: &FiberContext, n: i64, np: i64, nodes: usize) -> f64 {
    let alpha = (fiber.threshold(n) - fiber.threshold(np)).sqrt();
    let (g, w) = gauss_legendre_on(nodes, 0.0, PI / 2.0);
    let mut sum = 0.0;
    for (psi, wp) in g.iter().zip(&w) {
        let y = alpha * psi.sin();
        // λ − λ_{n'} = α² − y² = (α cos ψ)²
        let gap = alpha * psi.cos();
        for (phi, wf) in g.iter().zip(&w) {
            let x = y * phi.tan();
            // C in the variables x = (μ−λ_n)^{1/2}, y = (λ_n−λ)^{1/2}; forming μ
            // and λ explicitly would lose x² and y² against λ_n near the corner
            let c = y / (x.sqrt() * gap.sqrt() * PI * (x * x + y * y));
            // dμ dλ = 4xy dx dy, dx = y sec²φ dφ, dy = α cos ψ dψ
            let jac = 4.0 * x * y * (y / phi.cos().powi(2)) * gap;
            sum += c * c * jac * wp * wf;
        }
    }
    sum
}

/// Hilbert–Schmidt norm of C_{nn'}, by Gauss–Legendre quadrature after the
/// square-root substitutions and an angular map of the (x, y) quadrant.
pub fn c_hs_norm(fiber: &FiberContext, n: i64, np: i64) -> Result<f64> {
    if fiber.threshold(np) >= fiber.threshold(n) {
        return Err(Error::InvalidInput(format!("need λ_{np} < λ_{n}")));
    }
    let coarse = hs_quadrature(fiber, n, np, 200);
    let fine = hs_quadrature(fiber, n, np, 400);
    if (coarse - fine).abs() > 1e-8 {
        return Err(Error::Quadrature(format!("HS integral not converged: {coarse} vs {fine}")));
    }
    Ok(fine.sqrt())
}

/// Serializable samples of a kernel for CSV output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelSamples {
    pub n: i64,
    pub n_prime: i64,
    pub hs_norm_c: f64,
    pub lambda: Vec<f64>,
    pub b: Vec<C64>,
}

impl From<&RemainderKernel> for KernelSamples {
    fn from(k: &RemainderKernel) -> Self {
        Self {
            n: k.n,
            n_prime: k.n_prime,
            hs_norm_c: k.hs_norm_c,
            lambda: k.samples.iter().map(|s| s.0).collect(),
            b: k.samples.iter().map(|s| s.1).collect(),
        }
    }
}
