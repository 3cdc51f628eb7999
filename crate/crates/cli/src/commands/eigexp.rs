use halfspace_scattering::birman_schwinger::direct_m;
use halfspace_scattering::cascade::eigen::EigExpansionSummary;
use halfspace_scattering::cascade::{build_eig_expansion, m_eig};
use halfspace_scattering::linalg::C64;
use halfspace_scattering::scattering::{eig_limit, extrapolated_smatrix, SMatrix};
use halfspace_scattering::spectral::find_eigenvalues;
use halfspace_scattering::FiberProblem;
use serde::Serialize;

use super::threshold::Comparison;
use super::Run;
use crate::error::CliError;
use crate::output::per_k;

#[derive(Debug, Clone, Serialize)]
pub struct EigexpEntry {
    pub expansion: EigExpansionSummary,
    pub compare: Vec<Comparison>,
    /// lim S(λ − κ²) from the expansion.
    pub limit: SMatrix,
    /// max |limit − Richardson extrapolation of S(λ − κ²)| over entries.
    pub limit_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigexpData {
    pub k: f64,
    pub entries: Vec<EigexpEntry>,
}

fn expand(p: &FiberProblem, lambda: f64, compare: &[f64], kappas: &[f64]) -> Result<EigexpEntry, CliError> {
    let k = Some(p.fiber.k);
    let ex = build_eig_expansion(p, lambda).map_err(|e| CliError::from_core("jn_cascade/build_eig_expansion", k, e))?;
    let mut cmp = Vec::new();
    for &s in compare {
        let kappa = C64::new(s, -s);
        let a = m_eig(p, &ex, kappa).map_err(|e| CliError::from_core("jn_cascade/m_eig", k, e))?;
        let b = direct_m(p, C64::new(ex.lambda, 0.0) - kappa * kappa).map_err(|e| CliError::from_core("birman_schwinger/direct_m", k, e))?;
        cmp.push(Comparison { kappa: s, rel_error: (&a - &b).norm() / b.norm() });
    }
    let limit = eig_limit(p, ex.lambda).map_err(|e| CliError::from_core("scattering/eig_limit", k, e))?;
    let extra = extrapolated_smatrix(p, ex.lambda, kappas).map_err(|e| CliError::from_core("scattering/extrapolated_smatrix", k, e))?;
    let limit_deviation = if limit.entries.is_empty() { 0.0 } else { (&limit.entries - &extra.entries).map(|z| z.norm()).max() };
    Ok(EigexpEntry { expansion: ex.summary(), compare: cmp, limit, limit_deviation })
}

pub fn run(r: &mut Run) -> Result<(), CliError> {
    let opts = r.cfg.eigexp.clone();
    let range = r.cfg.lambda.clone();
    if opts.at.is_none() && range.is_none() {
        return Err(CliError::Validation("eigexp: give eigexp.at or a [lambda] range".into()));
    }
    let results = r.sweep("jn_cascade/eigexp", |p| {
        let points: Vec<f64> = match (&opts.at, &range) {
            (Some(a), _) => a.clone(),
            (None, Some(l)) => find_eigenvalues(p, (l.from, l.to), l.step)
                .map_err(|e| CliError::from_core("spectral/find_eigenvalues", Some(p.fiber.k), e))?
                .eigenvalues
                .iter()
                .map(|e| e.lambda)
                .collect(),
            (None, None) => unreachable!(),
        };
        Ok(points.into_iter().map(|l| (l, expand(p, l, &opts.compare, &opts.kappas))).collect::<Vec<_>>())
    })?;
    for (i, k, list) in results {
        let mut entries = Vec::new();
        for (l, res) in list {
            match res {
                Ok(e) => entries.push(e),
                Err(CliError::Numerical { op, k, message }) => r.fail(CliError::Numerical { op, k, message: format!("at λ = {l}: {message}") }),
                Err(e) => return Err(e),
            }
        }
        r.sink.json(&per_k("eigexp", i, "json"), "eigexp", Some(k), &EigexpData { k, entries })?;
    }
    Ok(())
}
