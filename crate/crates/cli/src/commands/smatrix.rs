use halfspace_scattering::scattering::{lipschitz_estimate, smatrix_scan, unitarity_tolerance};
use serde::{Deserialize, Serialize};

use super::{thresholds_in, threshold, Run};
use crate::error::CliError;
use crate::output::per_k;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Skipped {
    pub lambda: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmatrixData {
    pub k: f64,
    pub points: usize,
    pub evaluated: usize,
    /// Grid points inside a threshold guard or at an eigenvalue-induced singularity.
    pub skipped: Vec<Skipped>,
    pub max_unitarity_defect: f64,
    pub unitarity_tolerance: f64,
    /// Why the relaxed tolerance applies, if it does.
    pub tolerance_note: Option<String>,
    /// max ‖ΔS‖/Δλ between consecutive evaluated points.
    pub lipschitz: f64,
}

type Row = (f64, i64, i64, f64, f64, f64);

pub fn run(r: &mut Run) -> Result<(), CliError> {
    let l = r.cfg.lambda.clone().expect("validated");
    let grid = l.grid();
    let results = r.sweep("scattering/smatrix_scan", |p| {
        let scan = smatrix_scan(p, &grid);
        let tol = unitarity_tolerance(p);
        let mut rows: Vec<Row> = Vec::new();
        let mut skipped = Vec::new();
        let mut max_defect = 0.0f64;
        for (lambda, s) in grid.iter().zip(&scan) {
            match s {
                Ok(s) => {
                    max_defect = max_defect.max(s.unitarity_defect);
                    for (i, &n) in s.channels.iter().enumerate() {
                        for (j, &np) in s.channels.iter().enumerate() {
                            let z = s.entries[(i, j)];
                            rows.push((s.lambda, n, np, z.re, z.im, s.unitarity_defect));
                        }
                    }
                }
                Err(e) if e.is_validation() => return Err(CliError::from_core("scattering/smatrix", Some(p.fiber.k), e.clone())),
                Err(e) => skipped.push(Skipped { lambda: *lambda, reason: e.to_string() }),
            }
        }
        let data = SmatrixData {
            k: p.fiber.k,
            points: grid.len(),
            evaluated: grid.len() - skipped.len(),
            skipped,
            max_unitarity_defect: max_defect,
            unitarity_tolerance: tol.0,
            tolerance_note: tol.1,
            lipschitz: lipschitz_estimate(&scan),
        };
        Ok((data, rows))
    })?;
    for (i, k, (data, rows)) in results {
        if data.max_unitarity_defect > data.unitarity_tolerance {
            r.fail(CliError::Numerical {
                op: "scattering/unitarity".into(),
                k: Some(k),
                message: format!("defect {:.2e} exceeds {:.1e}", data.max_unitarity_defect, data.unitarity_tolerance),
            });
        }
        r.sink.json(&per_k("smatrix", i, "json"), "smatrix", Some(k), &data)?;
        r.sink.csv(&per_k("smatrix", i, "csv"), Some(k), &["lambda", "n", "n_prime", "re", "im", "unitarity_defect"], &rows)?;
    }
    threshold::write_all(r, |p| thresholds_in(p, l.from, l.to))
}
