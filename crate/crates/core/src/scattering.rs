//! Channel scattering matrices S_k(λ)_{nn'} = δ − 2i β⁻¹ Pₙ v M_k(λ,0) v Pₙ' β'⁻¹
//! on the open channels, and their limits at thresholds and at embedded
//! eigenvalues.

use rayon::prelude::*;
use serde::Serialize;

use crate::birman_schwinger::m_operator_guarded;
use crate::cascade::{build_eig_expansion, build_threshold_cascade, CascadeData};
use crate::linalg::{identity, spectral_norm, CMat, C64, I};
use crate::problem::FiberProblem;
use crate::quad::{extrapolate_to_zero, loglog_slope};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct SMatrix {
    pub lambda: f64,
    /// Open channels, sorted.
    pub channels: Vec<i64>,
    #[serde(serialize_with = "ser_matrix")]
    pub entries: CMat,
    /// ‖S*S − 1‖.
    pub unitarity_defect: f64,
}

/// Row-major [[re, im], ...] rows.
pub fn ser_matrix<S: serde::Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<[f64; 2]>> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
    serde::Serialize::serialize(&rows, s)
}

impl SMatrix {
    pub fn entry(&self, n: i64, np: i64) -> Option<C64> {
        let i = self.channels.iter().position(|&c| c == n)?;
        let j = self.channels.iter().position(|&c| c == np)?;
        Some(self.entries[(i, j)])
    }
}

pub fn unitarity_defect(s: &CMat) -> f64 {
    if s.nrows() == 0 {
        return 0.0;
    }
    spectral_norm(&(s.adjoint() * s - identity(s.nrows())))
}

/// The unitarity tolerance that applies to this potential, with the reason
/// when it had to be relaxed.
pub fn unitarity_tolerance(p: &FiberProblem) -> (f64, Option<String>) {
    let tail = p.potential.tail();
    if tail > 1e-9 {
        let why = format!("coefficient tail {tail:.2e} of v/u exceeds 1e-9 (sign-changing V or v_cutoff too small)");
        (p.tol.tol_unit_relaxed, Some(why))
    } else {
        (p.tol.tol_unit, None)
    }
}

/// δ − 2i X* M X with X = [v eₙ / βₙ]: unitary whenever M comes from a
/// Hermitian pencil, also after truncation.
fn contract(p: &FiberProblem, m: &CMat, channels: &[i64], betas: &[f64]) -> CMat {
    let mut x = CMat::zeros(p.dim(), channels.len());
    for (j, (&n, &b)) in channels.iter().zip(betas).enumerate() {
        x.set_column(j, &(p.w(n) / C64::new(b, 0.0)));
    }
    identity(channels.len()) - (x.adjoint() * m * x) * (I * 2.0)
}

fn open_channels(p: &FiberProblem, lambda: f64, strict: bool) -> Result<Vec<i64>> {
    let open: Vec<i64> = p
        .channels()
        .iter()
        .copied()
        .filter(|&n| {
            let t = p.fiber.threshold(n);
            if strict {
                t < lambda
            } else {
                t <= lambda
            }
        })
        .collect();
    for &n in &open {
        p.check_in_basis(n)?;
    }
    Ok(open)
}

/// `guard` is the threshold exclusion radius and `cond_cap` the largest
/// accepted condition number of u + G R⁰ G*.
pub(crate) fn smatrix_guarded(p: &FiberProblem, lambda: f64, guard: f64, cond_cap: f64) -> Result<SMatrix> {
    let m = m_operator_guarded(p, lambda, guard, cond_cap)?;
    let channels = open_channels(p, lambda, true)?;
    let betas: Vec<f64> = channels.iter().map(|&n| p.fiber.beta(n, lambda)).collect();
    let entries = contract(p, &m.matrix, &channels, &betas);
    let unitarity_defect = unitarity_defect(&entries);
    Ok(SMatrix { lambda, channels, entries, unitarity_defect })
}

pub fn smatrix(p: &FiberProblem, lambda: f64) -> Result<SMatrix> {
    smatrix_guarded(p, lambda, p.tol.eps_thr, p.tol.cond_cap)
}

/// S-matrices along a λ-grid, evaluated in parallel.
pub fn smatrix_scan(p: &FiberProblem, lambdas: &[f64]) -> Vec<Result<SMatrix>> {
    lambdas.par_iter().map(|&l| smatrix(p, l)).collect()
}

/// max ‖S(λᵢ₊₁) − S(λᵢ)‖ / Δλ over consecutive successful samples with
/// the same open channels.
pub fn lipschitz_estimate(scan: &[Result<SMatrix>]) -> f64 {
    let ok: Vec<&SMatrix> = scan.iter().filter_map(|r| r.as_ref().ok()).collect();
    ok.windows(2)
        .filter(|w| w[0].channels == w[1].channels)
        .map(|w| spectral_norm(&(&w[1].entries - &w[0].entries)) / (w[1].lambda - w[0].lambda).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// λ₀ − κ² with κ > 0.
    Left,
    /// λ₀ − κ² with iκ > 0, i.e. λ₀ + |κ|².
    Right,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdLimit {
    pub lambda: f64,
    pub side: Side,
    /// Channels labelling `matrix`: open ones on the left, open and opening on the right.
    pub channels: Vec<i64>,
    pub opening: Vec<i64>,
    #[serde(serialize_with = "ser_matrix")]
    pub matrix: CMat,
    pub ranks: [usize; 3],
    /// Norms of the cascade quantities entering the formula.
    pub term_norms: Vec<(String, f64)>,
}

pub fn threshold_limit(p: &FiberProblem, lambda0: f64, side: Side) -> Result<ThresholdLimit> {
    let cd = build_threshold_cascade(p, lambda0)?;
    threshold_limit_from(p, &cd, side)
}

pub fn threshold_limit_from(p: &FiberProblem, cd: &CascadeData, side: Side) -> Result<ThresholdLimit> {
    let l0 = cd.lambda;
    let open = open_channels(p, l0, true)?;
    let mut channels = open.clone();
    if side == Side::Right {
        channels.extend(cd.opening.iter().copied());
    }
    let [s0, s1, _] = &cd.s;
    let zero = CMat::zeros(p.dim(), p.dim());
    let c10 = cd.c_prime(1, 0).unwrap_or(&zero);
    let open_block = s0 * &cd.h1 * s0;
    let deep = c10 * s1 * &cd.h2 * s1 * c10;
    let nch = channels.len();
    let mut mat = CMat::zeros(nch, nch);
    for (i, &n) in channels.iter().enumerate() {
        for (j, &np) in channels.iter().enumerate() {
            let wn = p.w(n);
            let wp = p.w(np);
            let n_open = open.contains(&n);
            let np_open = open.contains(&np);
            let delta = if n == np { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            mat[(i, j)] = match (n_open, np_open) {
                (true, true) => {
                    let b = p.fiber.beta(n, l0) * p.fiber.beta(np, l0);
                    delta - I * 2.0 * (wn.adjoint() * &open_block * wp)[(0, 0)] / b
                }
                (false, false) => {
                    delta - (wn.adjoint() * &cd.g0 * wp)[(0, 0)] * 2.0 + (wn.adjoint() * &deep * wp)[(0, 0)] * 2.0
                }
                _ => C64::new(0.0, 0.0),
            };
        }
    }
    let term_norms = vec![
        ("S0".to_string(), spectral_norm(s0)),
        ("I1(0)".to_string(), spectral_norm(&cd.i1_0)),
        ("S1".to_string(), spectral_norm(s1)),
        ("I0(0)".to_string(), spectral_norm(&cd.i0_0)),
        ("C'10(0)".to_string(), spectral_norm(c10)),
        ("I2(0)".to_string(), spectral_norm(&cd.i2_0)),
        ("S2".to_string(), spectral_norm(&cd.s[2])),
    ];
    Ok(ThresholdLimit { lambda: l0, side, channels, opening: cd.opening.clone(), matrix: mat, ranks: cd.ranks, term_norms })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyScan {
    pub lambda: f64,
    pub side: Side,
    pub kappas: Vec<f64>,
    pub channels: Vec<i64>,
    #[serde(serialize_with = "ser_matrix")]
    pub extrapolated: CMat,
    #[serde(serialize_with = "ser_matrix")]
    pub limit: CMat,
    /// max |extrapolated − limit| over the open/open and opening/opening entries.
    pub deviation: f64,
    /// Log-log slope of max |S_{nn'}| over mixed (open, opening) pairs
    /// against |κ|, right approach only.
    pub mixed_slope: Option<f64>,
    /// Max |S_{nn'}| over mixed pairs at each |κ|.
    pub mixed_sizes: Vec<f64>,
    pub max_unitarity_defect: f64,
    pub samples: Vec<SMatrix>,
}

/// Evaluates S_k(λ₀ − κ²) along decreasing |κ| and extrapolates to κ = 0
/// (3-point Richardson in |κ| over the smallest magnitudes).
pub fn limit_consistency_scan(p: &FiberProblem, lambda0: f64, side: Side, kappas: &[f64]) -> Result<ConsistencyScan> {
    if kappas.len() < 3 || kappas.iter().any(|&k| !(k > 0.0)) || kappas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("need at least 3 positive, strictly decreasing |κ| values".into()));
    }
    let cd = build_threshold_cascade(p, lambda0)?;
    let lim = threshold_limit_from(p, &cd, side)?;
    let l0 = cd.lambda;
    // Approaching a threshold the condition number grows like |κ|⁻² (|κ|⁻⁴ with
    // S₂ ≠ 0) while S stays bounded; the cap only has to catch collisions with σ_p.
    let kmin = *kappas.last().unwrap();
    let guard = 0.5 * kmin * kmin;
    let cap = p.tol.cond_cap / (kmin * kmin);
    let samples: Vec<SMatrix> = kappas
        .par_iter()
        .map(|&k| {
            let l = match side {
                Side::Left => l0 - k * k,
                Side::Right => l0 + k * k,
            };
            smatrix_guarded(p, l, guard, cap)
        })
        .collect::<Result<_>>()?;
    let channels = lim.channels.clone();
    let n = channels.len();
    let tail = &samples[samples.len() - 3..];
    let hs = &kappas[kappas.len() - 3..];
    let mut extrapolated = CMat::zeros(n, n);
    for (i, &a) in channels.iter().enumerate() {
        for (j, &b) in channels.iter().enumerate() {
            let ys: Vec<C64> = tail.iter().map(|s| s.entry(a, b).expect("channel set is fixed along the scan")).collect();
            extrapolated[(i, j)] = extrapolate_to_zero(hs, &ys);
        }
    }
    // mixed (open, opening) entries behave like |κ|^{1/2}; they are checked
    // through their decay instead of the polynomial extrapolation
    let opening_ch = |c: i64| side == Side::Right && lim.opening.contains(&c);
    let mut deviation = 0.0f64;
    for (i, &a) in channels.iter().enumerate() {
        for (j, &b) in channels.iter().enumerate() {
            if opening_ch(a) == opening_ch(b) {
                deviation = deviation.max((extrapolated[(i, j)] - lim.matrix[(i, j)]).norm());
            }
        }
    }
    let (mixed_slope, mixed_sizes) = if side == Side::Right && !lim.opening.is_empty() {
        let open: Vec<i64> = channels.iter().copied().filter(|c| !lim.opening.contains(c)).collect();
        if open.is_empty() {
            (None, vec![])
        } else {
            let sizes: Vec<f64> = samples
                .iter()
                .map(|s| {
                    let mut m = 0.0f64;
                    for &a in &open {
                        for &b in &lim.opening {
                            m = m.max(s.entry(a, b).unwrap().norm()).max(s.entry(b, a).unwrap().norm());
                        }
                    }
                    m
                })
                .collect();
            let slope = if sizes.iter().all(|&x| x > 0.0) { Some(loglog_slope(kappas, &sizes)) } else { None };
            (slope, sizes)
        }
    } else {
        (None, vec![])
    };
    let max_unitarity_defect = samples.iter().map(|s| s.unitarity_defect).fold(0.0, f64::max);
    Ok(ConsistencyScan {
        lambda: l0,
        side,
        kappas: kappas.to_vec(),
        channels,
        extrapolated,
        limit: lim.matrix,
        deviation,
        mixed_slope,
        mixed_sizes,
        max_unitarity_defect,
        samples,
    })
}

/// lim_{κ→0} S_k(λ − κ²) at an embedded eigenvalue λ ∉ τ_k, from (T₀ + S)⁻¹.
pub fn eig_limit(p: &FiberProblem, lambda: f64) -> Result<SMatrix> {
    let ex = build_eig_expansion(p, lambda)?;
    let channels = open_channels(p, lambda, true)?;
    let betas: Vec<f64> = channels.iter().map(|&n| p.fiber.beta(n, lambda)).collect();
    let entries = contract(p, &ex.finite_part, &channels, &betas);
    let unitarity_defect = unitarity_defect(&entries);
    Ok(SMatrix { lambda, channels, entries, unitarity_defect })
}

/// Richardson extrapolation of S_k(λ − κ²), κ real, for comparison with
/// [`eig_limit`].
pub fn extrapolated_smatrix(p: &FiberProblem, lambda: f64, kappas: &[f64]) -> Result<SMatrix> {
    let kmin = kappas.iter().copied().fold(f64::INFINITY, f64::min);
    let cap = p.tol.cond_cap / (kmin * kmin);
    let samples: Vec<SMatrix> = kappas
        .iter()
        .map(|&k| smatrix_guarded(p, lambda - k * k, p.tol.eps_thr, cap))
        .collect::<Result<_>>()?;
    let channels = samples[0].channels.clone();
    let n = channels.len();
    let mut e = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let ys: Vec<C64> = samples.iter().map(|s| s.entries[(i, j)]).collect();
            e[(i, j)] = extrapolate_to_zero(kappas, &ys);
        }
    }
    Ok(SMatrix { lambda, channels, unitarity_defect: unitarity_defect(&e), entries: e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::tol::Cutoffs;
    use crate::torus::PotentialKind;

    fn problem(kind: PotentialKind, k: f64) -> FiberProblem {
        let cut = Cutoffs { modes: 8, v_cutoff: 16, samples: 1024 };
        FiberProblem::with(&kind, k, cut, Default::default()).unwrap()
    }

    #[test]
    fn constant_potential_diagonal() {
        let p = problem(PotentialKind::Constant(1.0), 0.25);
        let s = smatrix(&p, 1.0625).unwrap();
        assert!((s.entry(0, 0).unwrap() - c(0.0, -1.0)).norm() < 1e-12);
        assert!(s.entry(0, -1).unwrap().norm() < 1e-12);
        assert!(s.unitarity_defect < 1e-12);
    }

    #[test]
    fn zero_potential_gives_identity() {
        let p = problem(PotentialKind::Constant(0.0), 0.1);
        let s = smatrix(&p, 2.3).unwrap();
        assert!((s.entries.clone() - identity(s.channels.len())).norm() < 1e-15);
    }

    #[test]
    fn opening_channel_right_limit_is_minus_one() {
        let p = problem(PotentialKind::Constant(0.5), 0.25);
        let lim = threshold_limit(&p, 0.5625, Side::Right).unwrap();
        let i = lim.channels.iter().position(|&n| n == -1).unwrap();
        assert!((lim.matrix[(i, i)] + 1.0).norm() < 1e-12);
    }

    #[test]
    fn open_channel_limit_matches_closed_form() {
        let cval = 1.0;
        let p = problem(PotentialKind::Constant(cval), 0.25);
        let l0 = p.fiber.threshold(1);
        let expect = {
            let b2 = (l0 - 0.0625f64).sqrt();
            (c(b2, -cval)) / (c(b2, cval))
        };
        for side in [Side::Left, Side::Right] {
            let lim = threshold_limit(&p, l0, side).unwrap();
            let i = lim.channels.iter().position(|&n| n == 0).unwrap();
            assert!((lim.matrix[(i, i)] - expect).norm() < 1e-12);
        }
        let scan = limit_consistency_scan(&p, l0, Side::Left, &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(scan.deviation < 1e-6, "{}", scan.deviation);
    }
}
