//! Boundary data on the circle and its multiplication operators, represented
//! in the truncated basis e_m = e^{imθ}/√(2π), |m| ≤ M. Mode m sits at
//! matrix index m + M.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::linalg::{c, CMat, CVec, C64};
use crate::{Error, Result};

/// How the potential is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PotentialKind {
    Constant(f64),
    /// Coefficients of Σ c_j e^{ijθ}, listed for j = −d..=d.
    TrigPoly(Vec<C64>),
    /// Real values on the uniform grid θ_s = 2πs/L.
    Sampled(Vec<f64>),
}

impl PotentialKind {
    /// Trig polynomial from cosine/sine amplitudes: a0 + Σ a_j cos jθ + b_j sin jθ.
    pub fn from_cos_sin(a0: f64, cos: &[f64], sin: &[f64]) -> Self {
        let d = cos.len().max(sin.len());
        let mut coeffs = vec![c(0.0, 0.0); 2 * d + 1];
        coeffs[d] = c(a0, 0.0);
        for j in 1..=d {
            let a = cos.get(j - 1).copied().unwrap_or(0.0);
            let b = sin.get(j - 1).copied().unwrap_or(0.0);
            // a cos + b sin = ((a − ib)/2) e^{ijθ} + ((a + ib)/2) e^{−ijθ}
            coeffs[d + j] = c(0.5 * a, -0.5 * b);
            coeffs[d - j] = c(0.5 * a, 0.5 * b);
        }
        PotentialKind::TrigPoly(coeffs)
    }

    /// Random real trig polynomial of the given degree with an offset.
    /// With `offset > amplitude·Σ` the result is sign-definite.
    pub fn random_trig(seed: u64, degree: usize, amplitude: f64, offset: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cos: Vec<f64> = (0..degree).map(|_| amplitude * rng.gen_range(-1.0..1.0) / degree as f64).collect();
        let sin: Vec<f64> = (0..degree).map(|_| amplitude * rng.gen_range(-1.0..1.0) / degree as f64).collect();
        Self::from_cos_sin(offset, &cos, &sin)
    }

    fn eval_on_grid(&self, s: usize) -> Result<Vec<f64>> {
        match self {
            PotentialKind::Constant(v) => {
                if !v.is_finite() {
                    return Err(Error::InvalidInput("constant potential is not finite".into()));
                }
                Ok(vec![*v; s])
            }
            PotentialKind::TrigPoly(cf) => {
                if cf.is_empty() || cf.len() % 2 == 0 {
                    return Err(Error::InvalidInput("trig coefficients must be listed for j = −d..=d".into()));
                }
                if cf.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::InvalidInput("trig coefficients are not finite".into()));
                }
                let d = (cf.len() / 2) as i64;
                let scale = cf.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
                for j in 0..=d {
                    let a = cf[(d + j) as usize];
                    let b = cf[(d - j) as usize];
                    if (a - b.conj()).norm() > 1e-12 * scale {
                        return Err(Error::InvalidInput(format!("coefficients violate c(−{j}) = conj c({j})")));
                    }
                }
                Ok((0..s)
                    .map(|i| {
                        let th = 2.0 * PI * i as f64 / s as f64;
                        (-d..=d).map(|j| (cf[(j + d) as usize] * C64::from_polar(1.0, j as f64 * th)).re).sum()
                    })
                    .collect())
            }
            PotentialKind::Sampled(vals) => {
                if vals.is_empty() {
                    return Err(Error::InvalidInput("sampled potential has no values".into()));
                }
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("sampled potential contains non-finite values".into()));
                }
                Ok(trig_resample(vals, s))
            }
        }
    }
}

/// Trigonometric interpolation of periodic samples onto `s` equispaced points.
fn trig_resample(vals: &[f64], s: usize) -> Vec<f64> {
    let l = vals.len();
    if l == s {
        return vals.to_vec();
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<C64> = vals.iter().map(|&v| c(v, 0.0)).collect();
    planner.plan_fft_forward(l).process(&mut buf);
    let half = (l.min(s) - 1) / 2;
    let mut out = vec![c(0.0, 0.0); s];
    for j in 0..=half {
        out[j] = buf[j] / l as f64;
        if j > 0 {
            out[s - j] = buf[l - j] / l as f64;
        }
    }
    planner.plan_fft_inverse(s).process(&mut out);
    out.iter().map(|z| z.re).collect()
}

/// Fourier coefficients ĉ(j) = (1/2π)∫ f e^{−ijθ} of real samples, |j| ≤ cutoff,
/// together with the ℓ¹ mass of the discarded coefficients.
fn fourier_coeffs(samples: &[f64], cutoff: usize) -> (Vec<C64>, f64) {
    let s = samples.len();
    let mut buf: Vec<C64> = samples.iter().map(|&v| c(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(s).process(&mut buf);
    for z in buf.iter_mut() {
        *z /= s as f64;
    }
    let coeff = |j: i64| buf[j.rem_euclid(s as i64) as usize];
    let k = cutoff as i64;
    let hat = (-k..=k)
        .map(|j| {
            // enforce exact conjugate symmetry
            0.5 * (coeff(j) + coeff(-j).conj())
        })
        .collect();
    let top = (s / 2) as i64;
    let tail = (k + 1..=top).map(|j| coeff(j).norm() + coeff(-j).norm()).sum::<f64>();
    (hat, tail)
}

/// Boundary potential V together with v = |V|^{1/2}, u = sign V and their
/// Fourier data.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialModel {
    pub kind: PotentialKind,
    pub samples_per_period: usize,
    pub v_cutoff: usize,
    /// ĉ_v(j) for j = −v_cutoff..=v_cutoff.
    pub v_hat: Vec<C64>,
    /// ĉ_u(j) for j = −v_cutoff..=v_cutoff.
    pub u_hat: Vec<C64>,
    /// ℓ¹ mass of neglected v coefficients (sup-norm bound of the truncation).
    pub v_tail: f64,
    pub u_tail: f64,
    pub sup_norm: f64,
    pub sign_changing: bool,
    /// V on the sampling grid.
    #[serde(skip)]
    pub values: Vec<f64>,
}

pub fn build_potential(kind: &PotentialKind, samples_per_period: usize, v_cutoff: usize) -> Result<PotentialModel> {
    if samples_per_period < 8 * (v_cutoff + 1) {
        return Err(Error::InvalidInput(format!(
            "samples_per_period = {samples_per_period} must be at least 8·(v_cutoff+1) = {}",
            8 * (v_cutoff + 1)
        )));
    }
    let values = kind.eval_on_grid(samples_per_period)?;
    let v: Vec<f64> = values.iter().map(|x| x.abs().sqrt()).collect();
    let u: Vec<f64> = values.iter().map(|&x| if x >= 0.0 { 1.0 } else { -1.0 }).collect();
    let (v_hat, v_tail) = fourier_coeffs(&v, v_cutoff);
    let (u_hat, u_tail) = fourier_coeffs(&u, v_cutoff);
    let sup_norm = values.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let sign_changing = values.iter().any(|&x| x > 0.0) && values.iter().any(|&x| x < 0.0);
    Ok(PotentialModel { kind: kind.clone(), samples_per_period, v_cutoff, v_hat, u_hat, v_tail, u_tail, sup_norm, sign_changing, values })
}

impl PotentialModel {
    pub fn v_coeff(&self, j: i64) -> C64 {
        coeff_at(&self.v_hat, self.v_cutoff, j)
    }

    pub fn u_coeff(&self, j: i64) -> C64 {
        coeff_at(&self.u_hat, self.v_cutoff, j)
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm == 0.0
    }

    /// Combined tail of the v and u expansions; used to decide whether
    /// unitarity can be expected at full precision.
    pub fn tail(&self) -> f64 {
        self.v_tail.max(self.u_tail)
    }

    /// Column w_m = v̂(m − n), |m| ≤ M, i.e. the coefficients of v·e_n.
    pub fn channel_vector(&self, n: i64, modes: usize) -> CVec {
        let m = modes as i64;
        CVec::from_iterator(2 * modes + 1, (-m..=m).map(|k| self.v_coeff(k - n)))
    }

    /// Synthesized v and u at θ from the retained coefficients.
    pub fn synth(&self, theta: f64) -> (f64, f64) {
        let k = self.v_cutoff as i64;
        let mut v = 0.0;
        let mut u = 0.0;
        for j in -k..=k {
            let e = C64::from_polar(1.0, j as f64 * theta);
            v += (self.v_coeff(j) * e).re;
            u += (self.u_coeff(j) * e).re;
        }
        (v, u)
    }
}

fn coeff_at(hat: &[C64], cutoff: usize, j: i64) -> C64 {
    if j.unsigned_abs() as usize > cutoff {
        c(0.0, 0.0)
    } else {
        hat[(j + cutoff as i64) as usize]
    }
}

/// Matrix of an operator on span{e_m : |m| ≤ M}.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierOperator {
    pub modes: usize,
    pub matrix: CMat,
}

impl FourierOperator {
    pub fn index(&self, m: i64) -> usize {
        (m + self.modes as i64) as usize
    }

    pub fn entry(&self, m: i64, mp: i64) -> C64 {
        self.matrix[(self.index(m), self.index(mp))]
    }
}

/// Toeplitz realization entry(m, m') = ĉ(m − m') of multiplication by f.
/// `coeffs` lists ĉ(j) for j = −J..=J. If 2M > J the missing coefficients are
/// taken as zero only when `zero_pad` is set.
pub fn mult_operator(coeffs: &[C64], modes: usize, zero_pad: bool) -> Result<FourierOperator> {
    if coeffs.len() % 2 == 0 {
        return Err(Error::InvalidInput("coefficients must be listed for j = −J..=J".into()));
    }
    let j = coeffs.len() / 2;
    if 2 * modes > j && !zero_pad {
        return Err(Error::InvalidInput(format!(
            "cutoff M = {modes} needs coefficients up to |j| = {}, only {j} available",
            2 * modes
        )));
    }
    let scale = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    for k in 1..=j {
        if (coeffs[j + k] - coeffs[j - k].conj()).norm() > 1e-12 * scale {
            return Err(Error::InvalidInput("coefficients are not conjugate-symmetric".into()));
        }
    }
    let d = 2 * modes + 1;
    let matrix = CMat::from_fn(d, d, |r, s| coeff_at(coeffs, j, r as i64 - s as i64));
    Ok(FourierOperator { modes, matrix })
}

/// v Pₙ v = w w* with w_m = v̂(m − n).
pub fn rank_one_vpv(pm: &PotentialModel, n: i64, modes: usize) -> Result<FourierOperator> {
    if n.unsigned_abs() as usize > modes + pm.v_cutoff {
        return Err(Error::ChannelOutOfBasis(n));
    }
    let w = pm.channel_vector(n, modes);
    Ok(FourierOperator { modes, matrix: &w * w.adjoint() })
}

/// Coefficient dump rows (j, re, im).
pub fn coefficient_rows(hat: &[C64]) -> Vec<(i64, f64, f64)> {
    let k = (hat.len() / 2) as i64;
    hat.iter().enumerate().map(|(i, z)| (i as i64 - k, z.re, z.im)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn constant_four() {
        let pm = build_potential(&PotentialKind::Constant(4.0), 1024, 16).unwrap();
        assert!((pm.v_coeff(0) - c(2.0, 0.0)).norm() < 1e-14);
        assert!((pm.u_coeff(0) - c(1.0, 0.0)).norm() < 1e-14);
        assert!(pm.v_coeff(3).norm() < 1e-14);
    }

    #[test]
    fn constant_minus_one() {
        let pm = build_potential(&PotentialKind::Constant(-1.0), 1024, 16).unwrap();
        assert!((pm.v_coeff(0) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((pm.u_coeff(0) + c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn sqrt_of_two_plus_cos_is_reconstructed() {
        let pm = build_potential(&PotentialKind::from_cos_sin(2.0, &[1.0], &[]), 1024, 64).unwrap();
        for i in 0..1024 {
            let th = 2.0 * PI * i as f64 / 1024.0;
            let (v, u) = pm.synth(th);
            assert!((v - (2.0 + th.cos()).sqrt()).abs() < 1e-10);
            assert!((u - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(build_potential(&PotentialKind::Constant(1.0), 100, 64).is_err());
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(build_potential(&PotentialKind::Sampled(vec![1.0, f64::NAN]), 1024, 8).is_err());
        assert!(build_potential(&PotentialKind::TrigPoly(vec![]), 1024, 8).is_err());
        let asym = PotentialKind::TrigPoly(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(build_potential(&asym, 1024, 8).is_err());
    }

    #[test]
    fn cos_multiplication_matrix() {
        let cf = [c(0.5, 0.0), c(0.0, 0.0), c(0.5, 0.0)];
        let op = mult_operator(&cf, 1, true).unwrap();
        assert_eq!(op.entry(0, 0), c(0.0, 0.0));
        assert_eq!(op.entry(1, 0), c(0.5, 0.0));
        assert_eq!(op.entry(-1, 0), c(0.5, 0.0));
        assert_eq!(op.entry(1, -1), c(0.0, 0.0));
        assert!(mult_operator(&cf, 1, false).is_err());
    }

    #[test]
    fn rank_one_matches_product() {
        let pm = build_potential(&PotentialKind::from_cos_sin(2.0, &[1.0], &[]), 1024, 16).unwrap();
        let v = mult_operator(&pm.v_hat, 4, false).unwrap().matrix;
        let mut p0 = CMat::zeros(9, 9);
        p0[(4, 4)] = c(1.0, 0.0);
        let r = rank_one_vpv(&pm, 0, 4).unwrap().matrix;
        assert!(max_abs(&(&v * p0 * &v - r)) < 1e-12);
    }

    #[test]
    fn sampled_resampling_is_exact_for_band_limited_data() {
        let vals: Vec<f64> = (0..64).map(|i| 1.5 + (2.0 * PI * i as f64 / 64.0).cos()).collect();
        let pm = build_potential(&PotentialKind::Sampled(vals), 1024, 16).unwrap();
        let direct = build_potential(&PotentialKind::from_cos_sin(1.5, &[1.0], &[]), 1024, 16).unwrap();
        for j in -16..=16 {
            assert!((pm.v_coeff(j) - direct.v_coeff(j)).norm() < 1e-12);
        }
    }
}
