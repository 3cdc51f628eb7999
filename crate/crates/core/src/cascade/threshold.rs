//! The threshold cascade. At λ ∈ τ_k with opening channels N and κ in the
//! closed quarter disk (Re κ ≥ 0, Im κ ≤ 0):
//!
//! (u + G R⁰ₖ(λ−κ²) G*)⁻¹ = κ I₀(κ)⁻¹,  I₀(κ) = vPv + κ M₁(κ),
//!
//! and I₀, I₁, I₂ are inverted one after the other through their kernel
//! projections S₀ ⊇ S₁ ⊇ S₂. Operators living on subspaces are stored
//! extended by zero.

use serde::Serialize;

use super::invert::neumann;
use crate::birman_schwinger::sqrt_boundary;
use crate::linalg::{
    commutator, hermitian_eigenvalues, inverse, inverse_on, kernel_basis, max_abs, projector,
    real_part, sigma_min, spectral_norm, CMat, RankGap, C64, I,
};
use crate::problem::FiberProblem;
use crate::{Error, Result};

/// Residuals of the structural identities satisfied by the cascade.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CascadeChecks {
    /// max over j of ‖S_j² − S_j‖ and ‖S_j − S_j*‖.
    pub projections: f64,
    /// ‖S₁S₀ − S₁‖, ‖S₀S₁ − S₁‖, ‖S₂S₁ − S₂‖, ‖S₁S₂ − S₂‖.
    pub nesting: f64,
    /// Pₙ v S₀ = 0 = S₀ v Pₙ for n ∈ N.
    pub opening_channels_s0: f64,
    /// Pₙ v S₁ = 0 = S₁ v Pₙ for every n with λ_{k,n} ≤ λ.
    pub open_channels_s1: f64,
    /// Y S₂ = 0 = S₂ Y with Y = Re M₁(0).
    pub real_part_s2: f64,
    /// M₁(0) S₂ = 0 = S₂ M₁(0).
    pub m1_s2: f64,
    /// Smallest eigenvalue of −I₂(0) on ran S₁ (should be ≥ 0).
    pub minus_i2_min_eig: f64,
    /// max over 2 ≥ ℓ ≥ m ≥ 0 of ‖[S_ℓ, (I_m(0)+S_m)⁻¹]‖.
    pub commutators_at_zero: f64,
    /// max mismatch between analytic and finite-difference C′_{ℓm}(0).
    pub commutator_derivative_mismatch: f64,
}

impl CascadeChecks {
    /// Largest residual among the identities that must vanish exactly.
    pub fn max_identity_residual(&self) -> f64 {
        [
            self.projections,
            self.nesting,
            self.opening_channels_s0,
            self.open_channels_s1,
            self.real_part_s2,
            self.m1_s2,
            self.commutators_at_zero,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct CascadeData {
    pub lambda: f64,
    /// Channels opening at λ.
    pub opening: Vec<i64>,
    /// Σ_{n∈N} Pₙ in the mode basis.
    pub p: CMat,
    /// S₀, S₁, S₂.
    pub s: [CMat; 3],
    /// Orthonormal bases of ran S_j.
    pub q: [CMat; 3],
    pub ranks: [usize; 3],
    /// Rank decisions for S₀, S₁, S₂ (absent if the level was not reached).
    pub gaps: [Option<RankGap>; 3],
    pub i0_0: CMat,
    pub m1_0: CMat,
    /// (I₀(0)+S₀)⁻¹.
    pub g0: CMat,
    pub i1_0: CMat,
    /// (I₁(0)+S₁)⁻¹ on ran S₀.
    pub h1: CMat,
    pub m2_0: CMat,
    pub i2_0: CMat,
    /// (I₂(0)+S₂)⁻¹ on ran S₁.
    pub h2: CMat,
    pub m3_0: CMat,
    pub i3_0: CMat,
    /// σ_min of I₃(0) on ran S₂ (∞ when S₂ = 0).
    pub i3_sigma_min: f64,
    /// C′_{ℓm}(0) for the pairs (ℓ, m) with S_ℓ ≠ 0.
    pub c_prime: Vec<((usize, usize), CMat)>,
    /// |κ| below which every level's Neumann series contracts by at least 1/2.
    pub radius: f64,
    pub checks: CascadeChecks,
    /// λ − λ_{k,n} for every retained channel (0 on N).
    offsets: Vec<f64>,
}

impl CascadeData {
    pub fn c_prime(&self, l: usize, m: usize) -> Option<&CMat> {
        self.c_prime.iter().find(|(k, _)| *k == (l, m)).map(|(_, c)| c)
    }

    pub fn has_resonance(&self) -> bool {
        self.ranks[1] > 0
    }
}

/// Channel coefficients of M₁(κ) − u and of R(κ) = (M₁(κ) − M₁(0))/κ².
fn coefficients(offsets: &[f64], kappa: C64) -> (Vec<C64>, Vec<C64>) {
    let k2 = kappa * kappa;
    offsets
        .iter()
        .map(|&a| {
            if a == 0.0 {
                return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            }
            let sa = sqrt_boundary(C64::new(a, 0.0));
            let sk = sqrt_boundary(C64::new(a, 0.0) - k2);
            (I / sk, I / ((sa + sk) * sa * sk))
        })
        .unzip()
}

/// M₁(0) at the threshold λ whose opening channels are `opening`.
pub fn m1_zero(p: &FiberProblem, lambda: f64, opening: &[i64]) -> CMat {
    let offsets: Vec<f64> = p
        .channels()
        .iter()
        .map(|&n| if opening.contains(&n) { 0.0 } else { lambda - p.fiber.threshold(n) })
        .collect();
    m1_at(p, &offsets, C64::new(0.0, 0.0)).0
}

fn m1_at(p: &FiberProblem, offsets: &[f64], kappa: C64) -> (CMat, CMat) {
    let (d1, dr) = coefficients(offsets, kappa);
    (p.u() + p.channel_sum(&d1), p.channel_sum(&dr))
}

/// κ-dependent operators of the cascade.
pub(crate) struct Levels {
    /// (I₀(κ)+S₀)⁻¹
    pub g0k: CMat,
    /// (I₁(κ)+S₁)⁻¹ on ran S₀
    pub h1k: CMat,
    /// (I₂(κ)+S₂)⁻¹ on ran S₁
    pub h2k: Option<CMat>,
    /// I₃(κ)⁻¹ on ran S₂
    pub i3inv: Option<CMat>,
}

fn levels(p: &FiberProblem, cd: &CascadeData, kappa: C64) -> Result<Levels> {
    let tol = &p.tol;
    let [s0, s1, s2] = &cd.s;
    let (m1k, rk) = m1_at(p, &cd.offsets, kappa);
    let g0k = inverse(&(&cd.i0_0 + &m1k * kappa + s0))?;
    let x = &m1k * &cd.g0;
    let i1k = neumann(s0, &x, s0, kappa, 1, tol)?;
    let h1k = inverse_on(&cd.q[0], &(&i1k + s1))?;
    if cd.ranks[1] == 0 {
        return Ok(Levels { g0k, h1k, h2k: None, i3inv: None });
    }
    // M₂(κ) = S₀(M₁(κ)−M₁(0))S₀/κ − Σ_j (−κ)^j S₀ X^{j+2} S₀, with the
    // difference quotient taken channel by channel (no cancellation).
    let m2k = s0 * (&rk * kappa) * s0 - neumann(s0, &x, s0, kappa, 2, tol)?;
    let y = &m2k * &cd.h1;
    let i2k = neumann(s1, &y, s1, kappa, 1, tol)?;
    let h2k = inverse_on(&cd.q[1], &(&i2k + s2))?;
    if cd.ranks[2] == 0 {
        return Ok(Levels { g0k, h1k, h2k: Some(h2k), i3inv: None });
    }
    let m3k = m3_at(cd, &rk, &x, &m2k, kappa, tol)?;
    let i3k = neumann(s2, &(&m3k * &cd.h2), s2, kappa, 1, tol)?;
    let i3inv = inverse_on(&cd.q[2], &i3k)?;
    Ok(Levels { g0k, h1k, h2k: Some(h2k), i3inv: Some(i3inv) })
}

/// M₃(κ) = (I₂(κ) − I₂(0))/κ, expanded so that no O(1)/κ cancellation occurs.
fn m3_at(cd: &CascadeData, rk: &CMat, x: &CMat, m2k: &CMat, kappa: C64, tol: &crate::Tolerances) -> Result<CMat> {
    let [s0, s1, _] = &cd.s;
    let x0 = &cd.m1_0 * &cd.g0;
    let d = rk * &cd.g0 * kappa;
    // (M₂(κ) − M₂(0))/κ
    let m2_diff = s0 * rk * s0 - s0 * (&d * x + &x0 * &d) * s0 + neumann(s0, x, s0, kappa, 3, tol)?;
    let y = m2k * &cd.h1;
    Ok(s1 * m2_diff * s1 - neumann(s1, &y, s1, kappa, 2, tol)?)
}

/// M_k(λ, κ) at a threshold, assembled from the four-term expansion.
pub fn m_threshold(p: &FiberProblem, cd: &CascadeData, kappa: C64) -> Result<CMat> {
    if kappa.re < 0.0 || kappa.im > 0.0 {
        return Err(Error::InvalidInput(format!("κ = {kappa} is outside the quarter disk Re κ ≥ 0, Im κ ≤ 0")));
    }
    if kappa.norm() == 0.0 && cd.ranks[1] > 0 {
        return Err(Error::SingularLimit);
    }
    let lv = levels(p, cd, kappa)?;
    let [s0, s1, s2] = &cd.s;
    let mut m = &lv.g0k * kappa + &lv.g0k * s0 * &lv.h1k * s0 * &lv.g0k;
    if let Some(h2k) = &lv.h2k {
        let left = &lv.g0k * s0 * &lv.h1k * s1;
        let right = s1 * &lv.h1k * s0 * &lv.g0k;
        m += &left * h2k * &right / kappa;
        if let Some(i3inv) = &lv.i3inv {
            m += &left * h2k * s2 * i3inv * s2 * h2k * &right / (kappa * kappa);
        }
    }
    Ok(m)
}

/// Analyzes the threshold λ (which must be a point of τ_k).
pub fn build_threshold_cascade(p: &FiberProblem, lambda: f64) -> Result<CascadeData> {
    if p.potential.is_zero() {
        return Err(Error::Unperturbed);
    }
    let opening = p.fiber.channels_at(lambda);
    if opening.is_empty() {
        return Err(Error::NotAThreshold(lambda));
    }
    for &n in &opening {
        p.check_in_basis(n)?;
    }
    let lambda = p.fiber.threshold(opening[0]);
    let tol = &p.tol;
    let dim = p.dim();
    let zero = || CMat::zeros(dim, dim);

    let offsets: Vec<f64> =
        p.channel_thresholds().iter().map(|&l| if opening.iter().any(|&n| p.fiber.threshold(n) == l) { 0.0 } else { lambda - l }).collect();

    let mut pm = zero();
    for &n in &opening {
        let j = p.mode_index(n);
        pm[(j, j)] = C64::new(1.0, 0.0);
    }

    // level 0
    let i0_0 = p.vpv(&opening);
    let (q0, gap0) = kernel_basis(&i0_0, tol.eps_rank, tol.rank_gap, 0.0, "S₀")?;
    let s0 = projector(&q0);
    let m1_0 = m1_at(p, &offsets, C64::new(0.0, 0.0)).0;
    let g0 = inverse(&(&i0_0 + &s0))?;

    // level 1
    let i1_0 = &s0 * &m1_0 * &s0;
    let floor1 = spectral_norm(&m1_0);
    let (k1, gap1) = kernel_basis(&(q0.adjoint() * &m1_0 * &q0), tol.eps_rank, tol.rank_gap, floor1, "S₁")?;
    let q1 = &q0 * k1;
    let s1 = projector(&q1);
    let h1 = inverse_on(&q0, &(&i1_0 + &s1))?;

    // level 2
    let m2_0 = -(&s0 * &m1_0 * &g0 * &m1_0 * &s0);
    let i2_0 = &s1 * &m2_0 * &s1;
    let (q2, gap2, h2) = if q1.ncols() > 0 {
        let floor2 = spectral_norm(&m1_0).powi(2) * spectral_norm(&g0);
        let (k2, gap2) = kernel_basis(&(q1.adjoint() * &m2_0 * &q1), tol.eps_rank, tol.rank_gap, floor2, "S₂")?;
        let q2 = &q1 * k2;
        let s2 = projector(&q2);
        let h2 = inverse_on(&q1, &(&i2_0 + &s2))?;
        (q2, Some(gap2), h2)
    } else {
        (CMat::zeros(dim, 0), None, zero())
    };
    let s2 = projector(&q2);

    let mut cd = CascadeData {
        lambda,
        opening,
        p: pm,
        s: [s0, s1, s2],
        ranks: [q0.ncols(), q1.ncols(), q2.ncols()],
        q: [q0, q1, q2],
        gaps: [Some(gap0), Some(gap1), gap2],
        i0_0,
        m1_0,
        g0,
        i1_0,
        h1,
        m2_0,
        i2_0,
        h2,
        m3_0: zero(),
        i3_0: zero(),
        i3_sigma_min: f64::INFINITY,
        c_prime: Vec::new(),
        radius: f64::INFINITY,
        checks: CascadeChecks::default(),
        offsets,
    };

    // level 3: only the invertibility of I₃(0) on ran S₂ is needed
    if cd.ranks[2] > 0 {
        let zero_k = C64::new(0.0, 0.0);
        let (m1k, rk) = m1_at(p, &cd.offsets, zero_k);
        let x = &m1k * &cd.g0;
        cd.m3_0 = m3_at(&cd, &rk, &x, &cd.m2_0.clone(), zero_k, tol)?;
        cd.i3_0 = &cd.s[2] * &cd.m3_0 * &cd.s[2];
        let red = cd.q[2].adjoint() * &cd.m3_0 * &cd.q[2];
        let smin = sigma_min(&red);
        cd.i3_sigma_min = smin;
        let scale = spectral_norm(&cd.m3_0).max(1.0);
        if smin <= tol.rank_gap * tol.eps_rank * scale {
            return Err(Error::SingularI3(smin));
        }
    }

    cd.radius = adaptive_radius(&cd);
    cd.c_prime = commutator_derivatives(&cd);
    cd.checks = identity_checks(p, &cd)?;
    let fd = commutator_fd_mismatch(p, &cd)?;
    cd.checks.commutator_derivative_mismatch = fd;
    let scale = cd.c_prime.iter().map(|(_, c)| max_abs(c)).fold(1.0, f64::max);
    if fd > 1e-5 * scale {
        return Err(Error::DerivativeMismatch(fd));
    }
    Ok(cd)
}

fn adaptive_radius(cd: &CascadeData) -> f64 {
    let mut r = 0.5 / spectral_norm(&(&cd.m1_0 * &cd.g0)).max(1e-300);
    if cd.ranks[1] > 0 {
        r = r.min(0.5 / spectral_norm(&(&cd.m2_0 * &cd.h1)).max(1e-300));
    }
    if cd.ranks[2] > 0 {
        r = r.min(0.5 / spectral_norm(&(&cd.m3_0 * &cd.h2)).max(1e-300));
    }
    r
}

/// (I_m(0)+S_m)⁻¹ and the first-order coefficient M_{m+1}(0) for m = 0, 1, 2.
fn frozen(cd: &CascadeData, m: usize) -> (&CMat, &CMat) {
    match m {
        0 => (&cd.g0, &cd.m1_0),
        1 => (&cd.h1, &cd.m2_0),
        _ => (&cd.h2, &cd.m3_0),
    }
}

/// C′_{ℓm}(0) = −[S_ℓ, H_m M_{m+1}(0) H_m], H_m = (I_m(0)+S_m)⁻¹, from
/// differentiating I_m(κ) = I_m(0) + κ M_{m+1}(κ).
fn commutator_derivatives(cd: &CascadeData) -> Vec<((usize, usize), CMat)> {
    let mut out = Vec::new();
    for l in 0..3 {
        if cd.ranks[l] == 0 {
            continue;
        }
        for m in 0..=l {
            if m > 0 && cd.ranks[m - 1] == 0 {
                continue;
            }
            let (h, mm) = frozen(cd, m);
            out.push(((l, m), -commutator(&cd.s[l], &(h * mm * h))));
        }
    }
    out
}

fn commutator_fd_mismatch(p: &FiberProblem, cd: &CascadeData) -> Result<f64> {
    if cd.c_prime.is_empty() {
        return Ok(0.0);
    }
    let h = 1e-4;
    let at = |kappa: f64| -> Result<Vec<CMat>> {
        let lv = levels(p, cd, C64::new(kappa, 0.0))?;
        Ok(vec![lv.g0k, lv.h1k, lv.h2k.unwrap_or_else(|| CMat::zeros(p.dim(), p.dim()))])
    };
    let full = at(h)?;
    let half = at(0.5 * h)?;
    let mut worst = 0.0f64;
    for ((l, m), cp) in &cd.c_prime {
        let d1 = commutator(&cd.s[*l], &full[*m]) / C64::new(h, 0.0);
        let d2 = commutator(&cd.s[*l], &half[*m]) / C64::new(0.5 * h, 0.0);
        let rich = d2 * C64::new(2.0, 0.0) - d1;
        worst = worst.max(max_abs(&(rich - cp)));
    }
    Ok(worst)
}

fn identity_checks(p: &FiberProblem, cd: &CascadeData) -> Result<CascadeChecks> {
    let [s0, s1, s2] = &cd.s;
    let mut ch = CascadeChecks::default();
    for s in &cd.s {
        ch.projections = ch.projections.max(max_abs(&(s * s - s))).max(max_abs(&(s - s.adjoint())));
    }
    ch.nesting = [max_abs(&(s1 * s0 - s1)), max_abs(&(s0 * s1 - s1)), max_abs(&(s2 * s1 - s2)), max_abs(&(s1 * s2 - s2))]
        .into_iter()
        .fold(0.0, f64::max);
    let rank_one_residual = |n: i64, s: &CMat| {
        let w = p.w(n).into_owned();
        let left = w.adjoint() * s;
        let right = s * &w;
        left.iter().chain(right.iter()).map(|z| z.norm()).fold(0.0, f64::max)
    };
    ch.opening_channels_s0 = cd.opening.iter().map(|&n| rank_one_residual(n, s0)).fold(0.0, f64::max);
    ch.open_channels_s1 = p
        .channels()
        .iter()
        .filter(|&&n| p.fiber.threshold(n) <= cd.lambda)
        .map(|&n| rank_one_residual(n, s1))
        .fold(0.0, f64::max);
    let y = real_part(&cd.m1_0);
    ch.real_part_s2 = max_abs(&(&y * s2)).max(max_abs(&(s2 * &y)));
    ch.m1_s2 = max_abs(&(&cd.m1_0 * s2)).max(max_abs(&(s2 * &cd.m1_0)));
    ch.minus_i2_min_eig = if cd.ranks[1] > 0 {
        let red = -(cd.q[1].adjoint() * &cd.i2_0 * &cd.q[1]);
        hermitian_eigenvalues(&red)[0]
    } else {
        0.0
    };
    let inv0 = [&cd.g0, &cd.h1, &cd.h2];
    for l in 0..3 {
        for m in 0..=l {
            ch.commutators_at_zero = ch.commutators_at_zero.max(max_abs(&commutator(&cd.s[l], inv0[m])));
        }
    }
    Ok(ch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birman_schwinger::direct_m;
    use crate::linalg::c;
    use crate::tol::Cutoffs;
    use crate::torus::PotentialKind;

    fn problem(kind: PotentialKind, k: f64) -> FiberProblem {
        let cut = Cutoffs { modes: 8, v_cutoff: 16, samples: 1024 };
        FiberProblem::with(&kind, k, cut, Default::default()).unwrap()
    }

    fn rel(a: &CMat, b: &CMat) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn constant_positive_potential_has_no_resonance() {
        let cval = 0.7;
        let p = problem(PotentialKind::Constant(cval), 0.25);
        let cd = build_threshold_cascade(&p, 0.0625).unwrap();
        assert_eq!(cd.opening, vec![0]);
        assert_eq!(cd.ranks, [16, 0, 0]);
        for n in -8i64..=8 {
            if n == 0 {
                continue;
            }
            let j = p.mode_index(n);
            let a = 0.0625 - p.fiber.threshold(n);
            let b2 = a.abs().sqrt();
            let expect = if a > 0.0 { c(1.0, cval / b2) } else { c(1.0 + cval / b2, 0.0) };
            assert!((cd.i1_0[(j, j)] - expect).norm() < 1e-12);
        }
        let m0 = m_threshold(&p, &cd, c(0.0, 0.0)).unwrap();
        let j0 = p.mode_index(0);
        assert!(m0[(j0, j0)].norm() < 1e-14);
    }

    #[test]
    fn two_opening_channels_at_k_zero() {
        let p = problem(PotentialKind::from_cos_sin(2.0, &[0.5], &[0.3]), 0.0);
        let cd = build_threshold_cascade(&p, 1.0).unwrap();
        assert_eq!(cd.opening, vec![-1, 1]);
        assert_eq!(p.dim() - cd.ranks[0], 2);
    }

    #[test]
    fn matches_direct_inversion_for_generic_potential() {
        let p = problem(PotentialKind::from_cos_sin(2.0, &[0.5, -0.2], &[0.3]), 0.1);
        let lambda = p.fiber.threshold(-1);
        let cd = build_threshold_cascade(&p, lambda).unwrap();
        for s in [1e-2, 1e-3, 1e-4] {
            let kappa = c(s, -s);
            let m = m_threshold(&p, &cd, kappa).unwrap();
            let d = direct_m(&p, C64::new(lambda, 0.0) - kappa * kappa).unwrap();
            assert!(rel(&m, &d) < 1e-8, "κ = {kappa}: {}", rel(&m, &d));
        }
    }

    #[test]
    fn embedded_threshold_eigenvalue_uses_all_levels() {
        // V ≡ −1, k = 0: λ = 0 is a threshold and λ_{0,±1} − 1 = 0 an eigenvalue.
        let p = problem(PotentialKind::Constant(-1.0), 0.0);
        let cd = build_threshold_cascade(&p, 0.0).unwrap();
        assert_eq!(cd.ranks[1], 2);
        assert_eq!(cd.ranks[2], 2);
        for s in [1e-2, 1e-3, 1e-4] {
            let kappa = c(s, -s);
            let m = m_threshold(&p, &cd, kappa).unwrap();
            let d = direct_m(&p, -(kappa * kappa)).unwrap();
            assert!(rel(&m, &d) < 1e-6, "κ = {kappa}: {}", rel(&m, &d));
        }
        assert!(cd.checks.max_identity_residual() < 1e-10);
    }

    #[test]
    fn zero_potential_is_rejected() {
        let p = problem(PotentialKind::Constant(0.0), 0.0);
        assert!(matches!(build_threshold_cascade(&p, 1.0), Err(Error::Unperturbed)));
    }

    #[test]
    fn non_threshold_is_rejected() {
        let p = problem(PotentialKind::Constant(1.0), 0.0);
        assert!(matches!(build_threshold_cascade(&p, 0.5), Err(Error::NotAThreshold(_))));
    }
}
