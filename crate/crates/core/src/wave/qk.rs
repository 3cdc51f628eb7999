//! Q_k on channel data, its Cauchy–Schwarz bound, the dephasing proxy and
//! the assembled decomposition of W_{k,±} − 1.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{c_hs_norm, c_kernel, sandwich};
use super::leading::leading_term;
use super::{channel_norm, ChannelData, Phased, Scattered, TestState, SUPPORT_NODES};
use crate::birman_schwinger::m_operator;
use crate::halfline::{HalfLineGrid, RFunction};
use crate::problem::FiberProblem;
use crate::quad::gauss_legendre_on;
use crate::spectral::find_eigenvalues;
use crate::{Error, Result};

const OUTPUT_NODES: usize = 200;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QkChannel {
    pub n: i64,
    pub norm: f64,
    /// (μ, (Q_kξ)_n(μ)) at the norm quadrature nodes.
    pub samples: Vec<(f64, C64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QkOutput {
    pub channels: Vec<QkChannel>,
    pub norm: f64,
    /// Σ over channel pairs of ‖C_{nn'}‖_HS · sup|B_{nn'}| · ‖ξ_{n'}‖.
    pub bound: f64,
}

/// One λ-quadrature node of an input channel, with B_{nn'}(λ) for every
/// output channel n above it.
struct Node {
    np: i64,
    lambda: f64,
    /// w · ξ_{n'}(λ)
    weight: C64,
    b: Vec<(i64, C64)>,
}

/// (Q_kξ)_n(μ) = −Σ_{n'} ∫ C_{nn'}(μ,λ) B_{nn'}(λ) ξ_{n'}(λ) dλ. Supports of ξ
/// must avoid τ_k ∪ σ_p (B is evaluated by direct inversion there).
pub fn apply_qk<D: ChannelData + ?Sized>(p: &FiberProblem, xi: &D) -> Result<QkOutput> {
    let mut jobs = Vec::new();
    for np in xi.channels() {
        for (a, b) in xi.supports(np) {
            let (xs, ws) = gauss_legendre_on(SUPPORT_NODES, a, b);
            jobs.extend(xs.into_iter().zip(ws).map(|(x, w)| (np, x, w)));
        }
    }
    let nodes: Vec<Node> = jobs
        .par_iter()
        .map(|&(np, lambda, w)| {
            let v = xi.value(np, lambda)?;
            let mut b = Vec::new();
            if v != C64::new(0.0, 0.0) && !p.potential.is_zero() {
                let m = m_operator(p, lambda)?;
                for &n in p.channels() {
                    if p.fiber.threshold(n) > lambda {
                        b.push((n, sandwich(p, &m.matrix, n, np) / p.fiber.beta(n, lambda).powi(2)));
                    }
                }
            }
            Ok(Node { np, lambda, weight: v * w, b })
        })
        .collect::<Result<_>>()?;

    let mut outs: Vec<i64> = nodes.iter().flat_map(|nd| nd.b.iter().map(|x| x.0)).collect();
    outs.sort_unstable();
    outs.dedup();

    // bound: per pair, hs · sup|B| on the support · ‖ξ_{n'}‖
    let mut bound = 0.0;
    let mut hs_cache = std::collections::HashMap::new();
    for np in xi.channels() {
        let xn = channel_norm(xi, np)?;
        for &n in &outs {
            let sup = nodes
                .iter()
                .filter(|nd| nd.np == np)
                .flat_map(|nd| nd.b.iter().filter(|x| x.0 == n).map(|x| x.1.norm()))
                .fold(0.0, f64::max);
            if sup > 0.0 {
                let hs = match hs_cache.get(&(n, np)) {
                    Some(h) => *h,
                    None => {
                        let h = c_hs_norm(&p.fiber, n, np)?;
                        hs_cache.insert((n, np), h);
                        h
                    }
                };
                bound += hs * sup * xn;
            }
        }
    }

    let (ts, tw) = gauss_legendre_on(OUTPUT_NODES, 0.0, 1.0);
    let channels: Vec<QkChannel> = outs
        .par_iter()
        .map(|&n| {
            let ln = p.fiber.threshold(n);
            let terms: Vec<(i64, f64, C64)> = nodes
                .iter()
                .filter_map(|nd| nd.b.iter().find(|x| x.0 == n).map(|x| (nd.np, nd.lambda, x.1 * nd.weight)))
                .filter(|t| t.2 != C64::new(0.0, 0.0))
                .collect();
            let mut samples = Vec::with_capacity(ts.len());
            let mut norm2 = 0.0;
            for (t, w) in ts.iter().zip(&tw) {
                let x = t / (1.0 - t);
                let mu = ln + x * x;
                let v: C64 = -terms.iter().map(|(np, l, c)| c * c_kernel(&p.fiber, n, *np, mu, *l)).sum::<C64>();
                norm2 += v.norm_sqr() * 2.0 * x / (1.0 - t).powi(2) * w;
                samples.push((mu, v));
            }
            QkChannel { n, norm: norm2.sqrt(), samples }
        })
        .collect();
    let norm = channels.iter().map(|c| c.norm * c.norm).sum::<f64>().sqrt();
    Ok(QkOutput { channels, norm, bound })
}

/// ‖Q_k(e^{−itλ}ξ)‖ for each t.
pub fn qk_decay<D: ChannelData + ?Sized>(p: &FiberProblem, xi: &D, ts: &[f64]) -> Result<Vec<(f64, f64)>> {
    ts.iter().map(|&t| apply_qk(p, &Phased { inner: xi, t }).map(|q| (t, q.norm))).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveOptions {
    pub margin: f64,
    pub eig_step: f64,
    pub decay_times: Vec<f64>,
}

impl Default for WaveOptions {
    fn default() -> Self {
        Self { margin: 1e-2, eig_step: 1e-3, decay_times: vec![4.0, 8.0, 16.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelPieces {
    pub n: i64,
    pub leading: f64,
    pub remainder: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveReport {
    pub k: f64,
    pub state: TestState,
    pub eigenvalues: Vec<f64>,
    pub xi_norm: f64,
    /// Channel norms of (1⊗R(A₊))(S_k−1)ξ and Q_kξ.
    pub minus: Vec<ChannelPieces>,
    pub leading_norm: f64,
    pub remainder_norm: f64,
    pub remainder_bound: f64,
    /// (t, ‖Q_k e^{−itλ}ξ‖).
    pub decay: Vec<(f64, f64)>,
    /// Norms of (1⊗(1−R(A₊)))(S_k*−1)ξ and Q_kS_k*ξ, the pieces of W_{k,+} − 1 = (W_{k,−} − 1)S_k* + S_k* − 1.
    pub plus_leading_norm: f64,
    pub plus_remainder_norm: f64,
}

/// Both pieces of (W_{k,−} − 1)ξ in the spectral representation, with the
/// dephasing proxy for the remainder and the W_{k,+} counterparts.
pub fn wave_decomposition_report(grid: &HalfLineGrid, p: &FiberProblem, xi: &TestState, opts: &WaveOptions) -> Result<WaveReport> {
    let top = xi.channels.iter().map(|c| c.1.support().1).fold(f64::NEG_INFINITY, f64::max);
    let bottom = p.channel_thresholds().iter().copied().fold(f64::INFINITY, f64::min);
    if !top.is_finite() {
        return Err(Error::InvalidInput("empty test state".into()));
    }
    let eigenvalues: Vec<f64> = if p.potential.is_zero() {
        Vec::new()
    } else {
        find_eigenvalues(p, (bottom - 1.0, top + opts.margin), opts.eig_step)?.eigenvalues.iter().map(|e| e.lambda).collect()
    };
    xi.validate(&p.fiber, &eigenvalues, opts.margin)?;

    let r = RFunction;
    let s_minus = Scattered::new(p, xi, false, true);
    let lead = leading_term(grid, p, &s_minus, |x| r.eval(x))?;
    let q = apply_qk(p, xi)?;
    let mut ns: Vec<i64> = lead.iter().map(|c| c.0).chain(q.channels.iter().map(|c| c.n)).collect();
    ns.sort_unstable();
    ns.dedup();
    let minus: Vec<ChannelPieces> = ns
        .iter()
        .map(|&n| ChannelPieces {
            n,
            leading: lead.iter().find(|c| c.0 == n).map_or(0.0, |c| c.1),
            remainder: q.channels.iter().find(|c| c.n == n).map_or(0.0, |c| c.norm),
        })
        .collect();
    let leading_norm = minus.iter().map(|c| c.leading.powi(2)).sum::<f64>().sqrt();

    let s_adj_minus = Scattered::new(p, xi, true, true);
    let plus_lead = leading_term(grid, p, &s_adj_minus, |x| C64::new(1.0, 0.0) - r.eval(x))?;
    let s_adj = Scattered::new(p, xi, true, false);
    let plus_q = apply_qk(p, &s_adj)?;

    Ok(WaveReport {
        k: p.fiber.k,
        state: xi.clone(),
        eigenvalues,
        xi_norm: xi.norm()?,
        minus,
        leading_norm,
        remainder_norm: q.norm,
        remainder_bound: q.bound,
        decay: qk_decay(p, xi, &opts.decay_times)?,
        plus_leading_norm: plus_lead.iter().map(|c| c.1 * c.1).sum::<f64>().sqrt(),
        plus_remainder_norm: plus_q.norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfline::Bump;
    use crate::tol::Cutoffs;
    use crate::torus::PotentialKind;

    fn problem(kind: PotentialKind, k: f64) -> FiberProblem {
        let cut = Cutoffs { modes: 8, v_cutoff: 16, samples: 1024 };
        FiberProblem::with(&kind, k, cut, Default::default()).unwrap()
    }

    fn state(p: &FiberProblem) -> TestState {
        // channel 0 between the thresholds of channels 0 and −1
        let (l0, l1) = (p.fiber.threshold(0), p.fiber.threshold(-1));
        TestState::single(0, Bump::new(0.5 * (l0 + l1), 0.4 * (l1 - l0)))
    }

    #[test]
    fn constant_potential_has_no_remainder() {
        let p = problem(PotentialKind::Constant(0.7), 0.2);
        let q = apply_qk(&p, &state(&p)).unwrap();
        assert_eq!(q.norm, 0.0);
        assert!(q.channels.iter().all(|c| c.norm == 0.0));
    }

    #[test]
    fn zero_state_and_bound() {
        let p = problem(PotentialKind::from_cos_sin(0.3, &[0.8, -0.4], &[0.5]), 0.2);
        let xi = state(&p);
        let z = TestState::single(0, Bump { amplitude: 0.0, ..xi.channels[0].1 });
        assert_eq!(apply_qk(&p, &z).unwrap().norm, 0.0);
        let q = apply_qk(&p, &xi).unwrap();
        assert!(q.norm > 0.0 && q.norm <= q.bound, "{} vs {}", q.norm, q.bound);
        let d = qk_decay(&p, &xi, &[4.0, 8.0, 16.0]).unwrap();
        assert!(d.windows(2).all(|w| w[1].1 < w[0].1), "{d:?}");
        assert!(d[0].1 < q.norm);
    }

    #[test]
    fn decomposition_reports() {
        let g = HalfLineGrid::default();
        let opts = WaveOptions::default();
        let c = problem(PotentialKind::Constant(0.7), 0.2);
        let xi = TestState::single(0, Bump::new(5.8, 0.5));
        let rc = wave_decomposition_report(&g, &c, &xi, &opts).unwrap();
        assert_eq!(rc.remainder_norm, 0.0);
        assert!(rc.leading_norm > 0.0);
        let z = problem(PotentialKind::Constant(0.0), 0.2);
        let rz = wave_decomposition_report(&g, &z, &xi, &opts).unwrap();
        assert!(rz.leading_norm < 1e-12 && rz.remainder_norm == 0.0, "{rz:?}");
        let p = problem(PotentialKind::from_cos_sin(0.3, &[0.8, -0.4], &[0.5]), 0.2);
        let r = wave_decomposition_report(&g, &p, &xi, &opts).unwrap();
        assert!(r.leading_norm > r.remainder_norm, "{r:?}");
        assert!(r.remainder_norm <= r.remainder_bound);
        assert!(r.decay.windows(2).all(|w| w[1].1 < w[0].1), "{:?}", r.decay);
    }
}
