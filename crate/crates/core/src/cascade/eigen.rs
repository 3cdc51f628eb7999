//! Expansion of M_k(λ, κ) around an embedded eigenvalue λ ∉ τ_k:
//! u + G R⁰ₖ(λ−κ²) G* = T₀ + κ² T₁(κ), inverted through the kernel
//! projection S of T₀.

use serde::Serialize;

use super::invert::jn_invert;
use crate::birman_schwinger::{boundary_bs, sqrt_boundary};
use crate::linalg::{inverse, kernel_basis, projector, CMat, RankGap, C64, I};
use crate::problem::FiberProblem;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct EigExpansion {
    pub lambda: f64,
    pub t0: CMat,
    pub s: CMat,
    pub q: CMat,
    pub rank: usize,
    pub gap: RankGap,
    /// (T₀ + S)⁻¹.
    pub finite_part: CMat,
    /// max over open channels n of ‖S v Pₙ‖ and ‖Pₙ v S‖.
    pub open_channel_residual: f64,
    offsets: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigExpansionSummary {
    pub lambda: f64,
    pub rank: usize,
    pub gap: RankGap,
    pub open_channel_residual: f64,
}

impl EigExpansion {
    pub fn summary(&self) -> EigExpansionSummary {
        EigExpansionSummary {
            lambda: self.lambda,
            rank: self.rank,
            gap: self.gap.clone(),
            open_channel_residual: self.open_channel_residual,
        }
    }

    /// T₁(κ) = i Σₙ vPₙv / ((√a + √(a−κ²)) √a √(a−κ²)), a = λ − λ_{k,n}.
    pub fn t1(&self, p: &FiberProblem, kappa: C64) -> CMat {
        let k2 = kappa * kappa;
        let d: Vec<C64> = self
            .offsets
            .iter()
            .map(|&a| {
                let sa = sqrt_boundary(C64::new(a, 0.0));
                let sk = sqrt_boundary(C64::new(a, 0.0) - k2);
                I / ((sa + sk) * sa * sk)
            })
            .collect();
        p.channel_sum(&d)
    }
}

pub fn build_eig_expansion(p: &FiberProblem, lambda: f64) -> Result<EigExpansion> {
    let t0 = p.u() + boundary_bs(p, lambda)?.matrix;
    let (q, gap) = kernel_basis(&t0, p.tol.eps_rank, p.tol.rank_gap, 0.0, "S")?;
    let s = projector(&q);
    let finite_part = inverse(&(&t0 + &s))?;
    let open_channel_residual = p
        .channels()
        .iter()
        .filter(|&&n| p.fiber.threshold(n) < lambda)
        .map(|&n| {
            let w = p.w(n).into_owned();
            (&s * &w).iter().chain((w.adjoint() * &s).iter()).map(|z| z.norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let offsets = p.channel_thresholds().iter().map(|&l| lambda - l).collect();
    Ok(EigExpansion { lambda, t0, rank: q.ncols(), s, q, gap, finite_part, open_channel_residual, offsets })
}

/// M_k(λ, κ) for κ ≠ 0 in the closed quarter disk.
pub fn m_eig(p: &FiberProblem, ex: &EigExpansion, kappa: C64) -> Result<CMat> {
    if kappa.re < 0.0 || kappa.im > 0.0 {
        return Err(Error::InvalidInput(format!("κ = {kappa} is outside the quarter disk Re κ ≥ 0, Im κ ≤ 0")));
    }
    let t1 = ex.t1(p, kappa);
    if ex.rank == 0 {
        return inverse(&(&ex.t0 + t1 * (kappa * kappa)));
    }
    if kappa.norm() == 0.0 {
        return Err(Error::SingularLimit);
    }
    Ok(jn_invert(&ex.t0, &t1, &ex.s, kappa * kappa, &p.tol)?.inverse)
}
