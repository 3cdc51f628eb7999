use halfspace_scattering::spectral::find_eigenvalues;
use serde::{Deserialize, Serialize};

use super::Run;
use crate::error::CliError;
use crate::output::per_k;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenRow {
    pub lambda: f64,
    pub multiplicity: usize,
    pub cluster_width: f64,
    pub indicator: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumData {
    pub k: f64,
    pub interval: (f64, f64),
    pub grid_step: f64,
    pub eigenvalues: Vec<EigenRow>,
    pub near_threshold: Vec<f64>,
    pub windows: Vec<(f64, f64)>,
}

pub fn run(r: &mut Run) -> Result<(), CliError> {
    let l = r.cfg.lambda.clone().expect("validated");
    let results = r.sweep("spectral/find_eigenvalues", |p| {
        find_eigenvalues(p, (l.from, l.to), l.step).map_err(|e| CliError::from_core("spectral/find_eigenvalues", Some(p.fiber.k), e))
    })?;
    for (i, k, rep) in results {
        let data = SpectrumData {
            k,
            interval: rep.interval,
            grid_step: rep.grid_step,
            eigenvalues: rep
                .eigenvalues
                .iter()
                .map(|e| EigenRow { lambda: e.lambda, multiplicity: e.multiplicity, cluster_width: e.cluster_width, indicator: e.indicator })
                .collect(),
            near_threshold: rep.near_threshold.clone(),
            windows: rep.windows.clone(),
        };
        r.sink.json(&per_k("spectrum", i, "json"), "spectrum", Some(k), &data)?;
        r.sink.csv(&per_k("sigma_min", i, "csv"), Some(k), &["lambda", "sigma_min"], &rep.scan)?;
    }
    Ok(())
}
