//! The boundary sandwich G R⁰ₖ(z) G* = i Σₙ vPₙv / √(z − λ_{k,n}), its
//! boundary values on the real axis, and M_k(λ,0) = (u + G R⁰ₖ(λ+i0) G*)⁻¹.

use serde::Serialize;

use crate::fiber::ChannelSplit;
use crate::linalg::{c, inverse, re, svd, CMat, C64, I};
use crate::problem::FiberProblem;
use crate::{Error, Result};

/// Square root with positive imaginary part, for z off the cut [0, ∞).
pub fn sqrt_upper(z: C64) -> Result<C64> {
    if z.im == 0.0 && z.re >= 0.0 {
        return Err(Error::InvalidInput(format!("{z} lies on the cut [0, ∞); use the boundary value")));
    }
    let w = z.sqrt();
    Ok(if w.im < 0.0 { -w } else { w })
}

/// √z for z in the closed upper half-plane, with the boundary value from
/// above on the cut: √(x + i0) = √x for x ≥ 0, i√|x| for x < 0.
pub fn sqrt_boundary(z: C64) -> C64 {
    if z.im == 0.0 {
        if z.re >= 0.0 {
            re(z.re.sqrt())
        } else {
            c(0.0, (-z.re).sqrt())
        }
    } else {
        let w = z.sqrt();
        if w.im < 0.0 {
            -w
        } else {
            w
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SpectralPoint {
    Complex { re: f64, im: f64 },
    /// Boundary value λ + i0.
    Boundary(f64),
}

#[derive(Debug, Clone)]
pub struct BSOperator {
    pub k: f64,
    pub at: SpectralPoint,
    pub matrix: CMat,
    /// ‖V‖_∞ / √(λ_{first dropped} − Re z): size of the discarded channel tail.
    pub truncation_bound: f64,
    /// The tail bound exceeds the rank tolerance.
    pub flagged: bool,
}

fn truncation_bound(p: &FiberProblem, re_z: f64) -> f64 {
    let gap = p.fiber.first_dropped_threshold() - re_z;
    if gap <= 0.0 {
        f64::INFINITY
    } else {
        p.potential.sup_norm / gap.sqrt()
    }
}

/// G R⁰ₖ(z) G* for z in the closed upper half-plane, boundary values taken
/// from above. No threshold guard: callers own that decision.
pub(crate) fn bs_matrix(p: &FiberProblem, z: C64) -> CMat {
    let d: Vec<C64> = p.channel_thresholds().iter().map(|&l| I / sqrt_boundary(z - l)).collect();
    p.channel_sum(&d)
}

pub fn assemble_bs(p: &FiberProblem, z: C64) -> Result<BSOperator> {
    if z.im == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::InvalidInput("assemble_bs needs Im z ≠ 0; use boundary_bs on the real axis".into()));
    }
    let d: Vec<C64> =
        p.channel_thresholds().iter().map(|&l| sqrt_upper(z - l).map(|s| I / s)).collect::<Result<_>>()?;
    let tb = truncation_bound(p, z.re);
    Ok(BSOperator {
        k: p.fiber.k,
        at: SpectralPoint::Complex { re: z.re, im: z.im },
        matrix: p.channel_sum(&d),
        truncation_bound: tb,
        flagged: tb > p.tol.eps_rank,
    })
}

/// Σ_closed vPₙv/β² + i Σ_open vPₙv/β² at a real λ away from τ_k.
pub fn boundary_bs(p: &FiberProblem, lambda: f64) -> Result<BSOperator> {
    boundary_bs_guarded(p, lambda, p.tol.eps_thr)
}

pub(crate) fn boundary_bs_guarded(p: &FiberProblem, lambda: f64, guard: f64) -> Result<BSOperator> {
    if !lambda.is_finite() {
        return Err(Error::InvalidInput("λ is not finite".into()));
    }
    let (dist, thr) = p.fiber.nearest_threshold(lambda);
    if dist <= guard {
        return Err(Error::ThresholdGuard { lambda, threshold: thr, guard });
    }
    let d: Vec<C64> = p
        .channel_thresholds()
        .iter()
        .map(|&l| {
            let b2 = (lambda - l).abs().sqrt();
            if l <= lambda {
                c(0.0, 1.0 / b2)
            } else {
                re(1.0 / b2)
            }
        })
        .collect();
    let tb = truncation_bound(p, lambda);
    Ok(BSOperator {
        k: p.fiber.k,
        at: SpectralPoint::Boundary(lambda),
        matrix: p.channel_sum(&d),
        truncation_bound: tb,
        flagged: tb > p.tol.eps_rank,
    })
}

pub fn channel_split(p: &FiberProblem, lambda: f64) -> ChannelSplit {
    p.fiber.split(lambda)
}

/// M_k(λ, 0) together with the conditioning of u + G R⁰ G*.
#[derive(Debug, Clone)]
pub struct MOperator {
    pub lambda: f64,
    pub matrix: CMat,
    pub cond: f64,
    pub sigma_min: f64,
}

pub fn m_operator(p: &FiberProblem, lambda: f64) -> Result<MOperator> {
    m_operator_guarded(p, lambda, p.tol.eps_thr, p.tol.cond_cap)
}

pub(crate) fn m_operator_guarded(p: &FiberProblem, lambda: f64, guard: f64, cond_cap: f64) -> Result<MOperator> {
    let a = p.u() + boundary_bs_guarded(p, lambda, guard)?.matrix;
    let (_, s, _) = svd(&a);
    let smin = *s.last().unwrap();
    let cond = if smin > 0.0 { s[0] / smin } else { f64::INFINITY };
    if cond > cond_cap {
        return Err(Error::NearSingular { lambda, sigma_min: smin, cond });
    }
    Ok(MOperator { lambda, matrix: inverse(&a)?, cond, sigma_min: smin })
}

/// (u + G R⁰ₖ(z) G*)⁻¹ for z in the closed upper half-plane, without guards.
pub fn direct_m(p: &FiberProblem, z: C64) -> Result<CMat> {
    inverse(&(p.u() + bs_matrix(p, z)))
}

/// G R^V_k(λ+i0) G* = u − u M u.
pub fn gv_resolvent(p: &FiberProblem, lambda: f64) -> Result<CMat> {
    let m = m_operator(p, lambda)?;
    Ok(p.u() - p.u() * m.matrix * p.u())
}

/// One row of a conditioning scan: (λ, cond, σ_min).
pub fn condition_scan(p: &FiberProblem, lambdas: &[f64]) -> Vec<(f64, f64, f64)> {
    use rayon::prelude::*;
    lambdas
        .par_iter()
        .map(|&l| match boundary_bs(p, l) {
            Ok(bs) => {
                let s = crate::linalg::singular_values(&(p.u() + bs.matrix));
                let smin = *s.last().unwrap();
                (l, s[0] / smin, smin)
            }
            Err(_) => (l, f64::NAN, f64::NAN),
        })
        .collect()
}
