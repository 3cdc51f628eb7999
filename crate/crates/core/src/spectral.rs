//! Eigenvalues of H^V_k off τ_k through the kernel criterion: λ is an
//! eigenvalue iff there is q ≠ 0 with (u + Σ_closed vPₙv/β²) q = 0 and
//! Pₙ v q = 0 for every open channel n.

use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{hermitian_eigenvalues, singular_values, CMat, C64};
use crate::problem::FiberProblem;
use crate::quad::golden_min;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct Eigenvalue {
    pub lambda: f64,
    /// dim K at λ.
    pub multiplicity: usize,
    /// Spread of the individual minima of the `multiplicity` smallest
    /// singular values; nonzero when truncation splits a multiple eigenvalue.
    pub cluster_width: f64,
    /// σ_min / ‖A‖ at λ.
    pub indicator: f64,
    /// (λ, σ_min/‖A‖) grid samples around the dip.
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenReport {
    pub k: f64,
    pub interval: (f64, f64),
    pub grid_step: f64,
    pub eigenvalues: Vec<Eigenvalue>,
    /// Dips within 10·εthr of a threshold; not resolved as eigenvalues.
    pub near_threshold: Vec<f64>,
    /// Subintervals that cannot contain eigenvalues.
    pub windows: Vec<(f64, f64)>,
    /// The full (λ, σ_min/‖A‖) scan.
    pub scan: Vec<(f64, f64)>,
}

/// A(λ) = u + Σ_closed vPₙv/β² and the open-channel rows (v eₙ)*.
fn kernel_system(p: &FiberProblem, lambda: f64) -> (CMat, CMat) {
    let d: Vec<C64> = p
        .channel_thresholds()
        .iter()
        .map(|&l| if l > lambda { C64::new(1.0 / (l - lambda).sqrt(), 0.0) } else { C64::new(0.0, 0.0) })
        .collect();
    let a = p.u() + p.channel_sum(&d);
    let open: Vec<i64> = p.channels().iter().copied().filter(|&n| p.fiber.threshold(n) < lambda).collect();
    let mut rows = CMat::zeros(open.len(), p.dim());
    for (i, &n) in open.iter().enumerate() {
        rows.set_row(i, &p.w(n).adjoint());
    }
    (a, rows)
}

/// Singular values of [A; ρ·rows], ρ = ‖A‖, divided by ρ (decreasing).
fn stacked_singular_values(p: &FiberProblem, lambda: f64) -> Vec<f64> {
    let (a, rows) = kernel_system(p, lambda);
    let sa = singular_values(&a);
    let rho = sa[0].max(f64::MIN_POSITIVE);
    if rows.nrows() == 0 {
        return sa.iter().map(|s| s / rho).collect();
    }
    let n = a.ncols();
    let mut st = CMat::zeros(a.nrows() + rows.nrows(), n);
    st.rows_mut(0, a.nrows()).copy_from(&a);
    st.rows_mut(a.nrows(), rows.nrows()).copy_from(&(rows * C64::new(rho, 0.0)));
    singular_values(&st).iter().map(|s| s / rho).collect()
}

fn guard(p: &FiberProblem, lambda: f64) -> Result<()> {
    let (dist, thr) = p.fiber.nearest_threshold(lambda);
    if dist <= p.tol.eps_thr {
        return Err(Error::ThresholdGuard { lambda, threshold: thr, guard: p.tol.eps_thr });
    }
    Ok(())
}

/// σ_min of the stacked system [A(λ); ρ·rows], ρ = ‖A(λ)‖.
pub fn kernel_indicator(p: &FiberProblem, lambda: f64) -> Result<f64> {
    guard(p, lambda)?;
    let (a, rows) = kernel_system(p, lambda);
    let rho = singular_values(&a)[0];
    if rows.nrows() == 0 {
        return Ok(*singular_values(&a).last().unwrap());
    }
    let mut st = CMat::zeros(a.nrows() + rows.nrows(), a.ncols());
    st.rows_mut(0, a.nrows()).copy_from(&a);
    st.rows_mut(a.nrows(), rows.nrows()).copy_from(&(rows * C64::new(rho, 0.0)));
    Ok(*singular_values(&st).last().unwrap())
}

/// Eigenvalue-free subintervals of `interval`: (λ_a, λ_b − ‖V‖²_∞) between
/// consecutive distinct thresholds, and (−∞, min τ_k − ‖V‖²_∞).
pub fn localization_windows(p: &FiberProblem, interval: (f64, f64)) -> Vec<(f64, f64)> {
    let v2 = p.potential.sup_norm.powi(2);
    let mut thr: Vec<f64> = p.channel_thresholds().to_vec();
    thr.sort_by(f64::total_cmp);
    thr.dedup();
    let mut raw = vec![(f64::NEG_INFINITY, thr[0] - v2)];
    for w in thr.windows(2) {
        raw.push((w[0], w[1] - v2));
    }
    raw.into_iter()
        .map(|(a, b)| (a.max(interval.0), b.min(interval.1)))
        .filter(|(a, b)| b > a)
        .collect()
}

/// Number of negative eigenvalues of A(λ); below the bottom threshold A is
/// Hermitian and increasing in λ, so this count drops by dim K across an
/// eigenvalue.
fn negative_count(p: &FiberProblem, lambda: f64) -> usize {
    let (a, _) = kernel_system(p, lambda);
    hermitian_eigenvalues(&a).iter().filter(|&&e| e < 0.0).count()
}

fn bisect_count(p: &FiberProblem, mut lo: f64, mut hi: f64) -> Option<f64> {
    let c_lo = negative_count(p, lo);
    if negative_count(p, hi) >= c_lo {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if negative_count(p, mid) == c_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Scans `interval` with step `step` and refines every dip of σ_min below ε_eig.
pub fn find_eigenvalues(p: &FiberProblem, interval: (f64, f64), step: f64) -> Result<EigenReport> {
    let (a, b) = interval;
    if !(a.is_finite() && b.is_finite() && a < b) || !(step > 0.0) {
        return Err(Error::InvalidInput(format!("bad interval [{a}, {b}] or step {step}")));
    }
    if b >= p.fiber.first_dropped_threshold() {
        return Err(Error::InvalidInput("interval reaches a threshold outside the retained channels".into()));
    }
    let windows = localization_windows(p, interval);
    let mut report =
        EigenReport { k: p.fiber.k, interval, grid_step: step, eigenvalues: vec![], near_threshold: vec![], windows, scan: vec![] };
    if p.potential.is_zero() {
        return Ok(report);
    }
    let g = p.tol.eps_thr;
    let margin = 2.0 * step;
    let free = |x: f64| report.windows.iter().any(|&(wa, wb)| x > wa + margin && x < wb - margin);

    // segments between consecutive thresholds, minus the guard neighborhoods
    let mut cuts: Vec<f64> =
        p.channel_thresholds().iter().copied().filter(|&t| t > a - g && t < b + g).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![a];
    edges.extend(cuts.iter().copied());
    edges.push(b);
    let mut segments = Vec::new();
    for w in edges.windows(2) {
        let lo = if cuts.contains(&w[0]) { w[0] + 2.0 * g } else { w[0] };
        let hi = if cuts.contains(&w[1]) { w[1] - 2.0 * g } else { w[1] };
        if hi > lo {
            segments.push((lo, hi));
        }
    }

    let eps = p.tol.eps_eig;
    for (lo, hi) in segments {
        let n = ((hi - lo) / step).ceil().max(1.0) as usize;
        let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).filter(|&x| !free(x)).collect();
        if xs.is_empty() {
            continue;
        }
        let fs: Vec<f64> = xs.par_iter().map(|&x| *stacked_singular_values(p, x).last().unwrap()).collect();
        report.scan.extend(xs.iter().copied().zip(fs.iter().copied()));
        for i in 0..xs.len() {
            let left_ok = i == 0 || fs[i] <= fs[i - 1];
            let right_ok = i + 1 == xs.len() || fs[i] <= fs[i + 1];
            // neighbors must be contiguous grid points, not across a pruned window
            let contiguous = |j: usize| (xs[j] - xs[i]).abs() <= 1.5 * (hi - lo) / n as f64;
            if !(left_ok && right_ok) {
                continue;
            }
            let bl = if i > 0 && contiguous(i - 1) { xs[i - 1] } else { xs[i] };
            let br = if i + 1 < xs.len() && contiguous(i + 1) { xs[i + 1] } else { xs[i] };
            let (x, fx) = if br > bl {
                let (x, fx, _) = golden_min(|t| *stacked_singular_values(p, t).last().unwrap(), bl, br, 200, 1e-16);
                (x, fx)
            } else {
                (xs[i], fs[i])
            };
            if fx >= eps {
                continue;
            }
            let (dist, _) = p.fiber.nearest_threshold(x);
            if dist < 10.0 * g {
                report.near_threshold.push(x);
                continue;
            }
            let below_all = p.channel_thresholds().iter().all(|&t| t > x);
            let x = if below_all { bisect_count(p, bl.min(x - step), br.max(x + step).min(hi)).unwrap_or(x) } else { x };
            if report.eigenvalues.iter().any(|e: &Eigenvalue| (e.lambda - x).abs() < 1e-9 * (1.0 + x.abs())) {
                continue;
            }
            let sv = stacked_singular_values(p, x);
            let multiplicity = sv.iter().filter(|&&s| s < eps).count().max(1);
            let cluster_width = if multiplicity > 1 {
                let mins: Vec<f64> = (0..multiplicity)
                    .map(|j| {
                        golden_min(
                            |t| {
                                let s = stacked_singular_values(p, t);
                                s[s.len() - 1 - j]
                            },
                            x - step,
                            x + step,
                            200,
                            1e-15,
                        )
                        .0
                    })
                    .collect();
                mins.iter().copied().fold(f64::NEG_INFINITY, f64::max) - mins.iter().copied().fold(f64::INFINITY, f64::min)
            } else {
                0.0
            };
            let samples = xs
                .iter()
                .zip(&fs)
                .filter(|(t, _)| (*t - x).abs() <= 3.0 * step)
                .map(|(t, f)| (*t, *f))
                .collect();
            report.eigenvalues.push(Eigenvalue {
                lambda: x,
                multiplicity,
                cluster_width,
                indicator: *sv.last().unwrap(),
                samples,
            });
        }
    }
    report.eigenvalues.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
    report.near_threshold.sort_by(f64::total_cmp);
    report.near_threshold.dedup_by(|x, y| (*x - *y).abs() < 10.0 * g);
    Ok(report)
}

/// Eigenvalues {λ_{k,m} − c²} of a constant potential V ≡ c < 0 in
/// `interval`, with multiplicities, for channels |m| ≤ `channels`.
pub fn constant_potential_eigenvalues(c: f64, k: f64, interval: (f64, f64), channels: i64) -> Vec<(f64, usize)> {
    if c >= 0.0 {
        return Vec::new();
    }
    let mut out: Vec<(f64, usize)> = Vec::new();
    for m in -channels..=channels {
        let l = (m as f64 + k).powi(2) - c * c;
        if l < interval.0 || l > interval.1 {
            continue;
        }
        match out.iter_mut().find(|(x, _)| (*x - l).abs() < 1e-12) {
            Some(e) => e.1 += 1,
            None => out.push((l, 1)),
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol::Cutoffs;
    use crate::torus::PotentialKind;

    fn problem(kind: PotentialKind, k: f64) -> FiberProblem {
        let cut = Cutoffs { modes: 8, v_cutoff: 16, samples: 1024 };
        FiberProblem::with(&kind, k, cut, Default::default()).unwrap()
    }

    #[test]
    fn indicator_examples() {
        let p = problem(PotentialKind::Constant(-1.0), 0.0);
        assert!(kernel_indicator(&p, 3.0).unwrap() < 1e-8);
        assert!(kernel_indicator(&p, 2.5).unwrap() > 0.1);
        let z = problem(PotentialKind::Constant(0.0), 0.0);
        assert!((kernel_indicator(&z, 2.5).unwrap() - 1.0).abs() < 1e-14);
        assert!(kernel_indicator(&p, 4.0).is_err());
    }

    #[test]
    fn constant_potential_eigenvalues_found() {
        let p = problem(PotentialKind::Constant(-1.0), 0.0);
        let r = find_eigenvalues(&p, (2.0, 10.0), 0.01).unwrap();
        let got: Vec<(f64, usize)> = r.eigenvalues.iter().map(|e| (e.lambda, e.multiplicity)).collect();
        assert_eq!(got.len(), 2, "{got:?}");
        assert!((got[0].0 - 3.0).abs() < 1e-8 && got[0].1 == 2);
        assert!((got[1].0 - 8.0).abs() < 1e-8 && got[1].1 == 2);
    }

    #[test]
    fn bound_states_below_bottom_threshold() {
        // k = 0.25: λ_{k,0} − 1 = −0.9375 and λ_{k,−1} − 1 = −0.4375 both lie in [−1, 0].
        let p = problem(PotentialKind::Constant(-1.0), 0.25);
        let r = find_eigenvalues(&p, (-1.0, 0.0), 0.01).unwrap();
        let got: Vec<f64> = r.eigenvalues.iter().map(|e| e.lambda).collect();
        assert_eq!(got.len(), 2);
        assert!((got[0] + 0.9375).abs() < 1e-12);
        assert!((got[1] + 0.4375).abs() < 1e-12);
        assert!(r.eigenvalues.iter().all(|e| e.multiplicity == 1));
    }

    #[test]
    fn windows_example() {
        let p = problem(PotentialKind::Constant(-1.0), 0.0);
        let w = localization_windows(&p, (3.5, 9.5));
        assert!(w.iter().any(|&(a, b)| a == 4.0 && (b - 8.0).abs() < 1e-12));
    }

    #[test]
    fn oracle_counts_multiplicity() {
        let e = constant_potential_eigenvalues(-1.0, 0.0, (2.0, 10.0), 10);
        assert_eq!(e, vec![(3.0, 2), (8.0, 2)]);
    }
}
