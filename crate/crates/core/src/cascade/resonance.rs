//! Potentials tuned so that a threshold carries a resonance or eigenvalue
//! (S₁ ≠ 0). Generic potentials have S₁ = 0, which leaves the deeper cascade
//! levels unexercised.

use crate::linalg::{kernel_basis, sigma_min};
use crate::problem::FiberProblem;
use crate::quad::golden_min;
use crate::tol::{Cutoffs, Tolerances};
use crate::torus::PotentialKind;
use crate::{Error, Result};

use super::threshold::m1_zero;

/// σ_min of M₁(0) compressed to ran S₀ at the threshold λ.
pub fn compressed_m1_sigma(p: &FiberProblem, lambda: f64) -> Result<f64> {
    let opening = p.fiber.channels_at(lambda);
    if opening.is_empty() {
        return Err(Error::NotAThreshold(lambda));
    }
    let i0 = p.vpv(&opening);
    let (q0, _) = kernel_basis(&i0, p.tol.eps_rank, p.tol.rank_gap, 0.0, "S₀")?;
    let m1 = m1_zero(p, lambda, &opening);
    Ok(sigma_min(&(q0.adjoint() * m1 * &q0)))
}

#[derive(Debug, Clone)]
pub struct TunedPotential {
    pub coupling: f64,
    pub kind: PotentialKind,
    pub problem: FiberProblem,
    /// σ_min of the compressed M₁(0) at the tuned coupling, relative to ‖M₁(0)‖.
    pub sigma: f64,
}

/// Finds g in `bracket` minimizing σ_min of the compressed M₁(0) for the
/// family `family(g)` at the threshold of channel `n`.
pub fn tune_threshold_resonance(
    family: &dyn Fn(f64) -> PotentialKind,
    k: f64,
    n: i64,
    bracket: (f64, f64),
    cutoffs: Cutoffs,
    tol: Tolerances,
) -> Result<TunedPotential> {
    let eval = |g: f64| -> f64 {
        FiberProblem::with(&family(g), k, cutoffs, tol)
            .and_then(|p| {
                let lambda = p.fiber.threshold(n);
                compressed_m1_sigma(&p, lambda)
            })
            .unwrap_or(f64::INFINITY)
    };
    let steps = 64;
    let h = (bracket.1 - bracket.0) / steps as f64;
    let (i_best, _) = (0..=steps)
        .map(|i| (i, eval(bracket.0 + h * i as f64)))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let lo = bracket.0 + h * (i_best as f64 - 1.0).max(0.0);
    let hi = (bracket.0 + h * (i_best as f64 + 1.0)).min(bracket.1);
    let (g, s, _) = golden_min(eval, lo, hi, 300, 1e-16);
    let kind = family(g);
    let problem = FiberProblem::with(&kind, k, cutoffs, tol)?;
    let lambda = problem.fiber.threshold(n);
    let scale = crate::linalg::spectral_norm(&m1_zero(&problem, lambda, &problem.fiber.channels_at(lambda)));
    Ok(TunedPotential { coupling: g, kind, problem, sigma: s / scale })
}
