pub mod eigexp;
pub mod report;
pub mod smatrix;
pub mod spectrum;
pub mod threshold;
pub mod waveop;

use rayon::prelude::*;

use halfspace_scattering::FiberProblem;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Sink;

/// Everything a fiber-sweeping command needs.
pub struct Run {
    pub cfg: RunConfig,
    pub sink: Sink,
    /// Non-fatal numerical failures; the command still writes what it has
    /// and the process exits with code 3.
    pub failures: Vec<CliError>,
}

impl Run {
    /// Evaluates `f` on every fiber of the k-grid in parallel, returning the
    /// results in grid order so that writing stays deterministic.
    pub fn sweep<T, F>(&self, op: &str, f: F) -> Result<Vec<(usize, f64, T)>, CliError>
    where
        T: Send,
        F: Fn(&FiberProblem) -> Result<T, CliError> + Sync,
    {
        let kind = self.cfg.potential_kind();
        self.cfg
            .ks()
            .into_par_iter()
            .enumerate()
            .map(|(i, k)| {
                let p = FiberProblem::with(&kind, k, self.cfg.cutoffs, self.cfg.tolerances)
                    .map_err(|e| CliError::from_core(&format!("{op}/setup"), Some(k), e))?;
                f(&p).map(|t| (i, k, t))
            })
            .collect()
    }

    pub fn fail(&mut self, e: CliError) {
        eprintln!("warning: {e}");
        self.failures.push(e);
    }
}

/// Thresholds of the fiber strictly inside (from, to).
pub fn thresholds_in(p: &FiberProblem, from: f64, to: f64) -> Vec<f64> {
    let mut t: Vec<f64> = p.fiber.thresholds_upto(to).iter().map(|t| t.lambda).filter(|&l| l > from && l < to).collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}
