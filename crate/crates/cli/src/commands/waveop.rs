use halfspace_scattering::halfline::{appendix_limit_check, cosine_transform, theta_identity_check, Bump, HalfLineGrid, RFunction, ThetaReport};
use halfspace_scattering::linalg::{singular_values, CMat, C64};
use halfspace_scattering::quad::gauss_legendre_on;
use halfspace_scattering::spectral::find_eigenvalues;
use halfspace_scattering::wave::{c_hs_norm, wave_decomposition_report, RemainderKernel, TestState, WaveOptions, WaveReport};
use halfspace_scattering::FiberProblem;
use serde::{Deserialize, Serialize};

use super::Run;
use crate::config::WaveopOptions;
use crate::error::CliError;
use crate::output::per_k;

/// Singular values of the discretized C_{nn'}B_{nn'} are reported up to this many.
const SV_REPORTED: usize = 12;
const SV_NODES: usize = 32;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HsRow {
    pub n: i64,
    pub n_prime: i64,
    pub hs_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelSummary {
    pub n: i64,
    pub n_prime: i64,
    pub interval: (f64, f64),
    pub hs_norm_c: f64,
    pub sup_b: f64,
    /// Leading singular values of the Nyström discretization of C·B,
    /// divided by the largest one.
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveopData {
    pub k: f64,
    pub hs: Vec<HsRow>,
    pub report: WaveReport,
    pub kernels: Vec<KernelSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecaySide {
    pub t: Vec<f64>,
    pub d: Vec<f64>,
    pub strictly_decreasing: bool,
    /// d at the largest |t| over d at the smallest.
    pub ratio: f64,
    pub truncated_at: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppendixData {
    /// The reference packet is F_c of a symmetrised Gaussian centred at y = 1, variance 0.04.
    pub packet: String,
    pub forward: DecaySide,
    pub backward: DecaySide,
}

fn hs_table(p: &FiberProblem, span: i64) -> Result<Vec<HsRow>, CliError> {
    let mut rows = Vec::new();
    for n in -span..=span {
        for np in -span..=span {
            if p.fiber.threshold(n) > p.fiber.threshold(np) + 1e-9 {
                let h = c_hs_norm(&p.fiber, n, np).map_err(|e| CliError::from_core("wave_remainder/c_hs_norm", Some(p.fiber.k), e))?;
                rows.push(HsRow { n, n_prime: np, hs_norm: h });
            }
        }
    }
    Ok(rows)
}

/// One bump in channel 0, centred in the widest gap between λ_0, the
/// embedded eigenvalues and the next threshold.
fn default_state(p: &FiberProblem, o: &WaveopOptions) -> Result<TestState, CliError> {
    let l0 = p.fiber.threshold(0);
    let next = p.fiber.thresholds_upto(f64::INFINITY).iter().map(|t| t.lambda).find(|&l| l > l0 + 1e-9).unwrap_or(l0 + 1.0);
    let mut cuts = vec![l0];
    if !p.potential.is_zero() {
        let rep = find_eigenvalues(p, (l0 + o.margin, next - o.margin), o.eig_step)
            .map_err(|e| CliError::from_core("spectral/find_eigenvalues", Some(p.fiber.k), e))?;
        cuts.extend(rep.eigenvalues.iter().map(|e| e.lambda));
    }
    cuts.push(next);
    let (a, b) = cuts.windows(2).map(|w| (w[0], w[1])).max_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0))).expect("two cuts");
    Ok(TestState::single(0, Bump::new(0.5 * (a + b), 0.3 * (b - a))))
}

fn state(p: &FiberProblem, o: &WaveopOptions) -> Result<TestState, CliError> {
    if o.state.is_empty() {
        return default_state(p, o);
    }
    Ok(TestState {
        channels: o
            .state
            .iter()
            .map(|s| (s.channel, Bump { center: s.center, half_width: s.half_width, amplitude: s.amplitude }))
            .collect(),
    })
}

/// Nyström matrix √w_μ C(μ, λ) B(λ) √w_λ with μ = λ_n + x², x = t/(1−t).
fn kernel_singular_values(p: &FiberProblem, rk: &RemainderKernel) -> Result<Vec<f64>, halfspace_scattering::Error> {
    let (lo, hi) = rk.interval;
    let ln = p.fiber.threshold(rk.n);
    let (ls, lw) = gauss_legendre_on(SV_NODES, lo, hi);
    let (ts, tw) = gauss_legendre_on(SV_NODES, 0.0, 1.0);
    let bs: Vec<C64> = ls.iter().map(|&l| rk.b(p, l)).collect::<Result<_, _>>()?;
    let mut m = CMat::zeros(SV_NODES, SV_NODES);
    for (i, (t, wt)) in ts.iter().zip(&tw).enumerate() {
        let x = t / (1.0 - t);
        let mu = ln + x * x;
        let wmu = wt * 2.0 * x / (1.0 - t).powi(2);
        for (j, (l, wl)) in ls.iter().zip(&lw).enumerate() {
            m[(i, j)] = bs[j] * (rk.c(&p.fiber, mu, *l) * (wmu * wl).sqrt());
        }
    }
    let s = singular_values(&m);
    let top = s.first().copied().unwrap_or(0.0);
    Ok(s.iter().take(SV_REPORTED).map(|v| if top > 0.0 { v / top } else { 0.0 }).collect())
}

fn kernels(p: &FiberProblem, xi: &TestState, eigenvalues: &[f64], o: &WaveopOptions) -> Result<Vec<(KernelSummary, Vec<(f64, f64, f64)>)>, CliError> {
    let k = Some(p.fiber.k);
    let mut out = Vec::new();
    let mut sources: Vec<i64> = xi.channels.iter().map(|c| c.0).collect();
    sources.sort_unstable();
    sources.dedup();
    for np in sources {
        let lnp = p.fiber.threshold(np);
        let mut above: Vec<i64> = p.channels().iter().copied().filter(|&n| p.fiber.threshold(n) > lnp + 1e-9).collect();
        above.sort_by(|a, b| p.fiber.threshold(*a).total_cmp(&p.fiber.threshold(*b)).then(a.cmp(b)));
        for n in above.into_iter().take(o.kernel_pairs) {
            let rk = RemainderKernel::build(p, n, np, eigenvalues, o.kernel_samples)
                .map_err(|e| CliError::from_core("wave_remainder/RemainderKernel", k, e))?;
            let sv = if p.potential.is_zero() {
                vec![]
            } else {
                kernel_singular_values(p, &rk).map_err(|e| CliError::from_core("wave_remainder/kernel_singular_values", k, e))?
            };
            let samples = rk.samples.iter().map(|(l, b)| (*l, b.re, b.im)).collect();
            out.push((
                KernelSummary { n, n_prime: np, interval: rk.interval, hs_norm_c: rk.hs_norm_c, sup_b: rk.sup_b(), singular_values: sv },
                samples,
            ));
        }
    }
    Ok(out)
}

fn decay_side(grid: &HalfLineGrid, phi: &[C64], ts: &[f64]) -> Result<DecaySide, CliError> {
    let r = RFunction;
    let c = appendix_limit_check(grid, |x| r.eval(x), r.limits(), phi, ts).map_err(|e| CliError::from_core("halfline_calc/appendix_limit_check", None, e))?;
    let strictly_decreasing = c.d.windows(2).all(|w| w[1] < w[0]);
    let ratio = if c.d.is_empty() || c.d[0] == 0.0 { 0.0 } else { c.d[c.d.len() - 1] / c.d[0] };
    Ok(DecaySide { t: c.t, d: c.d, strictly_decreasing, ratio, truncated_at: c.truncated_at })
}

fn appendix(grid: &HalfLineGrid, times: &[f64]) -> Result<AppendixData, CliError> {
    let psi = grid.sample(|y| C64::new((-(y - 1.0f64).powi(2) / 0.08).exp() + (-(y + 1.0f64).powi(2) / 0.08).exp(), 0.0));
    let phi = cosine_transform(grid, &psi).map_err(|e| CliError::from_core("halfline_calc/cosine_transform", None, e))?;
    let mut ts: Vec<f64> = times.iter().map(|t| t.abs()).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let back: Vec<f64> = ts.iter().map(|t| -t).collect();
    Ok(AppendixData {
        packet: "F_c[exp(-(y-1)^2/0.08) + exp(-(y+1)^2/0.08)]".into(),
        forward: decay_side(grid, &phi, &ts)?,
        backward: decay_side(grid, &phi, &back)?,
    })
}

fn theta(grid: &HalfLineGrid, eps: &[f64]) -> Result<Vec<(Bump, ThetaReport)>, CliError> {
    [Bump::new(1.0, 0.5), Bump::new(1.5, 0.75), Bump::new(2.0, 1.0)]
        .into_iter()
        .map(|b| theta_identity_check(grid, &b, eps, 2e4).map(|r| (b, r)).map_err(|e| CliError::from_core("halfline_calc/theta_identity_check", None, e)))
        .collect()
}

pub fn run(r: &mut Run) -> Result<(), CliError> {
    let o = r.cfg.waveop.clone();
    let grid = HalfLineGrid::default();
    let mut times: Vec<f64> = o.decay_times.iter().map(|t| t.abs()).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let wopts = WaveOptions { margin: o.margin, eig_step: o.eig_step, decay_times: times.clone() };

    let results = r.sweep("wave_remainder", |p| {
        let k = Some(p.fiber.k);
        let hs = hs_table(p, o.hs_channels)?;
        let xi = state(p, &o)?;
        let report = wave_decomposition_report(&grid, p, &xi, &wopts).map_err(|e| CliError::from_core("wave_remainder/wave_decomposition_report", k, e))?;
        let ks = kernels(p, &xi, &report.eigenvalues, &o)?;
        Ok((hs, report, ks))
    })?;
    for (i, k, (hs, report, ks)) in results {
        r.sink.csv(&per_k("hs_norm", i, "csv"), Some(k), &["n", "n_prime", "hs_norm"], &hs.iter().map(|h| (h.n, h.n_prime, h.hs_norm)).collect::<Vec<_>>())?;
        let pieces: Vec<(i64, f64, f64)> = report.minus.iter().map(|c| (c.n, c.leading, c.remainder)).collect();
        r.sink.csv(&per_k("wave", i, "csv"), Some(k), &["n", "leading_norm", "remainder_norm"], &pieces)?;
        let mut kernels = Vec::new();
        for (summary, samples) in ks {
            let name = format!("kernel_k{i:03}_n{}_np{}.csv", summary.n, summary.n_prime);
            r.sink.csv(&name, Some(k), &["lambda", "re_b", "im_b"], &samples)?;
            kernels.push(summary);
        }
        r.sink.json(&per_k("waveop", i, "json"), "waveop", Some(k), &WaveopData { k, hs, report, kernels })?;
    }

    let app = appendix(&grid, &times)?;
    let rows: Vec<(f64, f64)> =
        app.backward.t.iter().zip(&app.backward.d).rev().chain(app.forward.t.iter().zip(&app.forward.d)).map(|(t, d)| (*t, *d)).collect();
    r.sink.csv("appendix_decay.csv", None, &["t", "d"], &rows)?;
    r.sink.json("appendix.json", "appendix", None, &app)?;

    if o.theta {
        let th = theta(&grid, &o.theta_eps)?;
        r.sink.json("theta.json", "theta", None, &th)?;
    }
    Ok(())
}
