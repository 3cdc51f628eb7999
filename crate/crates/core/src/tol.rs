//! Cutoffs and tolerances, kept in one place so every module agrees on them.

use serde::{Deserialize, Serialize};

/// Discretization sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cutoffs {
    /// Fourier modes |m| ≤ M in the truncated basis of L²(T).
    pub modes: usize,
    /// Fourier coefficients of v and u kept for |j| ≤ v_cutoff.
    pub v_cutoff: usize,
    /// Samples per period used to compute |V|^{1/2} and sign(V).
    pub samples: usize,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Self { modes: 32, v_cutoff: 64, samples: 4096 }
    }
}

impl Cutoffs {
    /// Channels |n| ≤ M + v_cutoff are the only ones with a nonzero
    /// projection onto the truncated basis.
    pub fn inner_channels(&self) -> usize {
        self.modes + self.v_cutoff
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative kernel-detection threshold for singular values.
    pub eps_rank: f64,
    /// Required ratio between the smallest kept and the largest discarded singular value.
    pub rank_gap: f64,
    /// Relative eigenvalue acceptance threshold on σ_min.
    pub eps_eig: f64,
    /// Minimal distance to a threshold for boundary-value evaluation.
    pub eps_thr: f64,
    /// Unitarity tolerance for S-matrices.
    pub tol_unit: f64,
    /// Relaxed unitarity tolerance used when the potential data is not smooth.
    pub tol_unit_relaxed: f64,
    /// Condition-number cap for the M-operator.
    pub cond_cap: f64,
    /// Neumann series term cutoff.
    pub series_tol: f64,
    pub series_max_terms: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_rank: 1e-8,
            rank_gap: 10.0,
            eps_eig: 1e-7,
            eps_thr: 1e-6,
            tol_unit: 1e-8,
            tol_unit_relaxed: 1e-5,
            cond_cap: 1e12,
            series_tol: 1e-14,
            series_max_terms: 60,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [
            self.eps_rank,
            self.rank_gap,
            self.eps_eig,
            self.eps_thr,
            self.tol_unit,
            self.tol_unit_relaxed,
            self.cond_cap,
            self.series_tol,
        ];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) || self.series_max_terms == 0 {
            return Err(crate::Error::InvalidInput("tolerances must be positive and finite".into()));
        }
        Ok(())
    }
}
