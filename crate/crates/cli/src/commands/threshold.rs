use halfspace_scattering::birman_schwinger::direct_m;
use halfspace_scattering::cascade::{build_threshold_cascade, m_threshold, CascadeChecks};
use halfspace_scattering::linalg::{RankGap, C64};
use halfspace_scattering::scattering::{limit_consistency_scan, threshold_limit_from, Side, ThresholdLimit};
use halfspace_scattering::FiberProblem;
use serde::Serialize;

use super::{thresholds_in, Run};
use crate::config::ThresholdOptions;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct ScanSummary {
    pub kappas: Vec<f64>,
    /// max |Richardson extrapolation − limit| over open/open and opening/opening entries.
    pub deviation: f64,
    pub mixed_slope: Option<f64>,
    pub mixed_sizes: Vec<f64>,
    pub max_unitarity_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SideReport {
    pub side: Side,
    pub limit: Option<ThresholdLimit>,
    pub scan: Option<ScanSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    /// κ = (1−i)·kappa.
    pub kappa: f64,
    /// ‖M_cascade − M_direct‖ / ‖M_direct‖ (Frobenius).
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdData {
    pub k: f64,
    pub lambda: f64,
    pub opening: Vec<i64>,
    pub ranks: [usize; 3],
    pub gaps: [Option<RankGap>; 3],
    pub radius: f64,
    pub i3_sigma_min: f64,
    pub checks: CascadeChecks,
    pub max_identity_residual: f64,
    pub sides: Vec<SideReport>,
    pub compare: Vec<Comparison>,
}

/// Cascade, one-sided limits, consistency scans and the direct-inversion
/// comparison at one threshold. Failures of a single side are recorded in
/// the report; only a failed cascade is an error.
pub fn analyze(p: &FiberProblem, l0: f64, opts: &ThresholdOptions) -> Result<ThresholdData, CliError> {
    let k = p.fiber.k;
    let cd = build_threshold_cascade(p, l0).map_err(|e| CliError::from_core("jn_cascade/build_threshold_cascade", Some(k), e))?;
    let mut sides = Vec::new();
    for side in [Side::Left, Side::Right] {
        let mut rep = SideReport { side, limit: None, scan: None, error: None };
        match threshold_limit_from(p, &cd, side) {
            Ok(lim) => rep.limit = Some(lim),
            Err(e) => rep.error = Some(e.to_string()),
        }
        if rep.limit.as_ref().is_some_and(|l| !l.channels.is_empty()) {
            match limit_consistency_scan(p, cd.lambda, side, &opts.kappas) {
                Ok(s) => {
                    rep.scan = Some(ScanSummary {
                        kappas: s.kappas,
                        deviation: s.deviation,
                        mixed_slope: s.mixed_slope,
                        mixed_sizes: s.mixed_sizes,
                        max_unitarity_defect: s.max_unitarity_defect,
                    })
                }
                Err(e) => rep.error = Some(e.to_string()),
            }
        }
        sides.push(rep);
    }
    let mut compare = Vec::new();
    for &s in &opts.compare {
        let kappa = C64::new(s, -s);
        let a = m_threshold(p, &cd, kappa).map_err(|e| CliError::from_core("jn_cascade/m_threshold", Some(k), e))?;
        let b = direct_m(p, C64::new(cd.lambda, 0.0) - kappa * kappa)
            .map_err(|e| CliError::from_core("birman_schwinger/direct_m", Some(k), e))?;
        compare.push(Comparison { kappa: s, rel_error: (&a - &b).norm() / b.norm() });
    }
    Ok(ThresholdData {
        k,
        lambda: cd.lambda,
        opening: cd.opening.clone(),
        ranks: cd.ranks,
        gaps: cd.gaps,
        radius: cd.radius,
        i3_sigma_min: cd.i3_sigma_min,
        max_identity_residual: cd.checks.max_identity_residual(),
        checks: cd.checks,
        sides,
        compare,
    })
}

pub fn file_name(i: usize, j: usize) -> String {
    format!("threshold_k{i:03}_{j:02}.json")
}

/// Analyzes every requested threshold of every fiber and writes one file per threshold.
pub fn write_all(r: &mut Run, points: impl Fn(&FiberProblem) -> Vec<f64> + Sync) -> Result<(), CliError> {
    let opts = r.cfg.threshold.clone();
    let results = r.sweep("jn_cascade", |p| Ok(points(p).into_iter().map(|l| (l, analyze(p, l, &opts))).collect::<Vec<_>>()))?;
    for (i, k, list) in results {
        for (j, (l, res)) in list.into_iter().enumerate() {
            match res {
                Ok(data) => r.sink.json(&file_name(i, j), "threshold", Some(k), &data)?,
                Err(CliError::Numerical { op, k, message }) => {
                    r.fail(CliError::Numerical { op, k, message: format!("at λ₀ = {l}: {message}") })
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}

pub fn run(r: &mut Run) -> Result<(), CliError> {
    let at = r.cfg.threshold.at.clone();
    let range = r.cfg.lambda.clone();
    if at.is_none() && range.is_none() {
        return Err(CliError::Validation("threshold: give threshold.at or a [lambda] range".into()));
    }
    write_all(r, |p| match (&at, &range) {
        (Some(a), _) => a.clone(),
        (None, Some(l)) => thresholds_in(p, l.from, l.to),
        (None, None) => unreachable!(),
    })
}
