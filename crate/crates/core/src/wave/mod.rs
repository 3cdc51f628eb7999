//! The wave operator W_{k,−} − 1 in the spectral representation: the
//! leading term (1⊗R(A₊))(S_k − 1) and the remainder Q_k built from the
//! kernels B_{nn'} and C_{nn'}.

mod kernel;
mod leading;
mod qk;

pub use kernel::{b_kernel, c_hs_norm, c_kernel, KernelSamples, RemainderKernel, SpecialPoint, LIMIT_STEP};
pub use leading::{leading_term, leading_term_identity_check, LeadingIdentityReport};
pub use qk::{apply_qk, qk_decay, wave_decomposition_report, ChannelPieces, QkChannel, QkOutput, WaveOptions, WaveReport};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::fiber::FiberContext;
use crate::problem::FiberProblem;
use crate::scattering::{smatrix, SMatrix};
use crate::halfline::Bump;
use crate::quad::gauss_legendre_on;
use crate::{Error, Result};

/// Quadrature nodes per support interval for λ-integrals of channel data.
pub(crate) const SUPPORT_NODES: usize = 96;

/// Channel functions λ ↦ ξ_n(λ) in the spectral representation, each
/// supported in finitely many closed intervals.
pub trait ChannelData: Sync {
    fn channels(&self) -> Vec<i64>;
    fn supports(&self, n: i64) -> Vec<(f64, f64)>;
    fn value(&self, n: i64, lambda: f64) -> Result<C64>;

    /// (Σ_n ∫|ξ_n|² dλ)^{1/2}.
    fn norm(&self) -> Result<f64> {
        let mut s = 0.0;
        for n in self.channels() {
            s += channel_norm(self, n)?.powi(2);
        }
        Ok(s.sqrt())
    }
}

pub(crate) fn channel_norm<D: ChannelData + ?Sized>(d: &D, n: i64) -> Result<f64> {
    let mut s = 0.0;
    for (a, b) in d.supports(n) {
        let (xs, ws) = gauss_legendre_on(SUPPORT_NODES, a, b);
        for (x, w) in xs.iter().zip(&ws) {
            s += d.value(n, *x)?.norm_sqr() * w;
        }
    }
    Ok(s.sqrt())
}

/// Union of closed intervals as a sorted disjoint list.
pub(crate) fn merge_intervals(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// An element of the dense set D_k: finitely many channels, each a smooth
/// bump in λ supported away from τ_k ∪ σ_p.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TestState {
    pub channels: Vec<(i64, Bump)>,
}

impl TestState {
    pub fn single(n: i64, bump: Bump) -> Self {
        Self { channels: vec![(n, bump)] }
    }

    /// Rejects supports that come within `margin` of a channel threshold or
    /// of a listed eigenvalue, or that reach below the channel's own threshold.
    pub fn validate(&self, fiber: &FiberContext, eigenvalues: &[f64], margin: f64) -> Result<()> {
        for (n, b) in &self.channels {
            if !fiber.channels().any(|m| m == *n) {
                return Err(Error::ChannelOutOfBasis(*n));
            }
            let (a, c) = b.support();
            if a <= fiber.threshold(*n) + margin {
                return Err(Error::InvalidInput(format!("support of channel {n} reaches its threshold")));
            }
            let hit = fiber.thresholds_upto(c + margin).iter().map(|t| t.lambda).chain(eigenvalues.iter().copied()).find(|&t| t > a - margin && t < c + margin);
            if let Some(t) = hit {
                return Err(Error::InvalidInput(format!("support [{a}, {c}] of channel {n} is within {margin} of the special point {t}")));
            }
        }
        Ok(())
    }
}

impl ChannelData for TestState {
    fn channels(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.channels.iter().map(|c| c.0).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn supports(&self, n: i64) -> Vec<(f64, f64)> {
        merge_intervals(self.channels.iter().filter(|c| c.0 == n).map(|c| c.1.support()).collect())
    }

    fn value(&self, n: i64, lambda: f64) -> Result<C64> {
        Ok(C64::new(self.channels.iter().filter(|c| c.0 == n).map(|c| c.1.eval(lambda)).sum(), 0.0))
    }
}

/// ξ multiplied by e^{−itλ}.
pub struct Phased<'a, D: ChannelData + ?Sized> {
    pub inner: &'a D,
    pub t: f64,
}

impl<D: ChannelData + ?Sized> ChannelData for Phased<'_, D> {
    fn channels(&self) -> Vec<i64> {
        self.inner.channels()
    }

    fn supports(&self, n: i64) -> Vec<(f64, f64)> {
        self.inner.supports(n)
    }

    fn value(&self, n: i64, lambda: f64) -> Result<C64> {
        Ok(self.inner.value(n, lambda)? * C64::from_polar(1.0, -self.t * lambda))
    }
}

/// (S_k − 1)ξ, or (S_k* − 1)ξ, or S_k*ξ, channel by channel.
pub struct Scattered<'a, D: ChannelData + ?Sized> {
    pub p: &'a FiberProblem,
    pub inner: &'a D,
    pub adjoint: bool,
    pub minus_one: bool,
    cache: Mutex<HashMap<u64, Arc<SMatrix>>>,
}

impl<'a, D: ChannelData + ?Sized> Scattered<'a, D> {
    pub fn new(p: &'a FiberProblem, inner: &'a D, adjoint: bool, minus_one: bool) -> Self {
        Self { p, inner, adjoint, minus_one, cache: Mutex::new(HashMap::new()) }
    }

    fn s_at(&self, lambda: f64) -> Result<Arc<SMatrix>> {
        if let Some(s) = self.cache.lock().expect("cache poisoned").get(&lambda.to_bits()) {
            return Ok(s.clone());
        }
        let s = Arc::new(smatrix(self.p, lambda)?);
        self.cache.lock().expect("cache poisoned").insert(lambda.to_bits(), s.clone());
        Ok(s)
    }
}

impl<D: ChannelData + ?Sized> ChannelData for Scattered<'_, D> {
    fn channels(&self) -> Vec<i64> {
        let lo = self.inner.channels().iter().flat_map(|&n| self.inner.supports(n)).map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        self.p.channels().iter().copied().filter(|&n| self.p.fiber.threshold(n) < lo).collect()
    }

    fn supports(&self, n: i64) -> Vec<(f64, f64)> {
        let ln = self.p.fiber.threshold(n);
        merge_intervals(self.inner.channels().iter().flat_map(|&m| self.inner.supports(m)).filter(|s| s.0 > ln).collect())
    }

    fn value(&self, n: i64, lambda: f64) -> Result<C64> {
        if lambda <= self.p.fiber.threshold(n) {
            return Ok(C64::new(0.0, 0.0));
        }
        let s = self.s_at(lambda)?;
        let mut acc = C64::new(0.0, 0.0);
        for m in self.inner.channels() {
            let x = self.inner.value(m, lambda)?;
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            let e = if self.adjoint { s.entry(m, n).map(|z| z.conj()) } else { s.entry(n, m) };
            acc += e.unwrap_or_default() * x;
        }
        if self.minus_one {
            acc -= self.inner.value(n, lambda)?;
        }
        Ok(acc)
    }
}
