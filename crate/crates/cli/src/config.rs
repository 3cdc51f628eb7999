//! Run configuration, read from a TOML file with one table per concern.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use halfspace_scattering::{Cutoffs, PotentialKind, Tolerances};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for `kind = "random"` potentials; `--seed` overrides it.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Output directory; `--out` overrides it.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    pub potential: PotentialSpec,
    pub fiber: FiberSpec,
    #[serde(default)]
    pub cutoffs: Cutoffs,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub lambda: Option<LambdaSpec>,
    #[serde(default)]
    pub threshold: ThresholdOptions,
    #[serde(default)]
    pub eigexp: EigexpOptions,
    #[serde(default)]
    pub waveop: WaveopOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialSpec {
    Constant {
        value: f64,
    },
    /// a0 + Σ cos[j−1]·cos jθ + sin[j−1]·sin jθ.
    Trig {
        #[serde(default)]
        a0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// Values on the uniform grid θ_s = 2πs/L.
    Sampled {
        values: Vec<f64>,
    },
    Random {
        degree: usize,
        amplitude: f64,
        offset: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub k_grid: Option<Grid>,
}

/// `points` values from `from` to `to`, endpoints included.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => vec![],
            1 => vec![self.from],
            n => (0..n).map(|i| self.from + (self.to - self.from) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSpec {
    pub from: f64,
    pub to: f64,
    /// Sample count for S-matrix scans.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Step of the σ_min scan in eigenvalue searches.
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_points() -> usize {
    201
}

fn default_step() -> f64 {
    1e-2
}

impl LambdaSpec {
    pub fn grid(&self) -> Vec<f64> {
        Grid { from: self.from, to: self.to, points: self.points }.values()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdOptions {
    /// Thresholds to expand at; defaults to every threshold in the λ range.
    pub at: Option<Vec<f64>>,
    /// Decreasing |κ| for the one-sided consistency scans.
    pub kappas: Vec<f64>,
    /// |κ| values for the cascade-vs-direct comparison along κ = (1−i)|κ|.
    pub compare: Vec<f64>,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self { at: None, kappas: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4], compare: vec![1e-2, 1e-3, 1e-4] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigexpOptions {
    /// Eigenvalues to expand at; defaults to those found in the λ range.
    pub at: Option<Vec<f64>>,
    pub compare: Vec<f64>,
    /// κ values for the Richardson check of the boundary limit.
    pub kappas: Vec<f64>,
}

impl Default for EigexpOptions {
    fn default() -> Self {
        Self { at: None, compare: vec![1e-2, 1e-3, 1e-4], kappas: vec![4e-3, 2e-3, 1e-3] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateChannel {
    pub channel: i64,
    pub center: f64,
    pub half_width: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveopOptions {
    /// Channel pairs with |n|, |n'| ≤ this enter the HS table.
    pub hs_channels: i64,
    /// Test state; empty means one bump in channel 0 halfway to the next threshold.
    pub state: Vec<StateChannel>,
    /// Closed channels per state channel for which B is sampled.
    pub kernel_pairs: usize,
    pub kernel_samples: usize,
    pub margin: f64,
    pub eig_step: f64,
    pub decay_times: Vec<f64>,
    /// Run the Θ identity on three reference bumps (slow).
    pub theta: bool,
    pub theta_eps: Vec<f64>,
}

impl Default for WaveopOptions {
    fn default() -> Self {
        Self {
            hs_channels: 2,
            state: vec![],
            kernel_pairs: 2,
            kernel_samples: 65,
            margin: 1e-2,
            eig_step: 1e-3,
            decay_times: vec![2.0, 4.0, 8.0, 16.0],
            theta: false,
            theta_eps: vec![0.1, 0.05, 0.025, 0.0125],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Ok((cfg, text))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn potential_kind(&self) -> PotentialKind {
        match &self.potential {
            PotentialSpec::Constant { value } => PotentialKind::Constant(*value),
            PotentialSpec::Trig { a0, cos, sin } => PotentialKind::from_cos_sin(*a0, cos, sin),
            PotentialSpec::Sampled { values } => PotentialKind::Sampled(values.clone()),
            PotentialSpec::Random { degree, amplitude, offset } => {
                PotentialKind::random_trig(self.seed(), *degree, *amplitude, *offset)
            }
        }
    }

    pub fn ks(&self) -> Vec<f64> {
        match (self.fiber.k, &self.fiber.k_grid) {
            (Some(k), _) => vec![k],
            (None, Some(g)) => g.values(),
            (None, None) => vec![],
        }
    }

    /// SHA-256 of the canonical JSON form; the output directory is not part of it.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Semantic checks, reported with the line of the offending key when it
    /// can be found in `text`.
    pub fn validate(&self, text: &str, needs_lambda: bool) -> Result<(), CliError> {
        let mut problems: Vec<(Option<usize>, String)> = Vec::new();
        let mut bad = |section: &str, key: &str, msg: String| {
            problems.push((locate(text, section, key), format!("{section}.{key}: {msg}")));
        };

        match (self.fiber.k, &self.fiber.k_grid) {
            (Some(_), Some(_)) => bad("fiber", "k", "give either k or k_grid, not both".into()),
            (None, None) => bad("fiber", "k", "missing (or give k_grid)".into()),
            (Some(k), None) if !in_zone(k) => bad("fiber", "k", format!("{k} lies outside [-1/2, 1/2]")),
            (None, Some(g)) => {
                if g.points == 0 {
                    bad("fiber", "k_grid", "grid is empty".into());
                }
                if !in_zone(g.from) || !in_zone(g.to) {
                    bad("fiber", "k_grid", format!("[{}, {}] is not inside [-1/2, 1/2]", g.from, g.to));
                }
            }
            _ => {}
        }

        match &self.potential {
            PotentialSpec::Constant { value } if !value.is_finite() => {
                bad("potential", "value", "must be finite".into())
            }
            PotentialSpec::Sampled { values } if values.is_empty() => {
                bad("potential", "values", "no samples given".into())
            }
            PotentialSpec::Random { degree, amplitude, .. } if *degree == 0 || !(*amplitude >= 0.0) => {
                bad("potential", "degree", "need degree ≥ 1 and amplitude ≥ 0".into())
            }
            _ => {}
        }

        let c = &self.cutoffs;
        if c.modes == 0 {
            bad("cutoffs", "modes", "need at least one Fourier mode".into());
        }
        if c.v_cutoff < 2 * c.modes {
            bad("cutoffs", "v_cutoff", format!("must be at least 2·modes = {}", 2 * c.modes));
        }
        if c.samples < 2 * c.v_cutoff + 1 {
            bad("cutoffs", "samples", format!("must exceed 2·v_cutoff = {}", 2 * c.v_cutoff));
        }
        if let Err(e) = self.tolerances.validate() {
            bad("tolerances", "eps_rank", e.to_string());
        }

        match &self.lambda {
            None if needs_lambda => bad("lambda", "from", "this command needs a [lambda] range".into()),
            Some(l) => {
                if !(l.from.is_finite() && l.to.is_finite() && l.from < l.to) {
                    bad("lambda", "from", format!("need from < to, got [{}, {}]", l.from, l.to));
                }
                if l.points == 0 {
                    bad("lambda", "points", "λ grid is empty".into());
                }
                if !(l.step > 0.0) {
                    bad("lambda", "step", "must be positive".into());
                }
            }
            None => {}
        }

        let decreasing = |v: &[f64]| v.iter().all(|x| *x > 0.0) && v.windows(2).all(|w| w[1] < w[0]);
        if self.threshold.kappas.len() < 3 || !decreasing(&self.threshold.kappas) {
            bad("threshold", "kappas", "need at least 3 positive, strictly decreasing values".into());
        }
        if self.threshold.compare.is_empty() || self.threshold.compare.iter().any(|x| !(*x > 0.0)) {
            bad("threshold", "compare", "need positive values".into());
        }
        if self.eigexp.kappas.len() < 2 || !decreasing(&self.eigexp.kappas) {
            bad("eigexp", "kappas", "need at least 2 positive, strictly decreasing values".into());
        }
        if self.eigexp.compare.is_empty() || self.eigexp.compare.iter().any(|x| !(*x > 0.0)) {
            bad("eigexp", "compare", "need positive values".into());
        }

        let w = &self.waveop;
        if w.hs_channels < 1 {
            bad("waveop", "hs_channels", "need at least 1".into());
        }
        if w.kernel_samples < 2 {
            bad("waveop", "kernel_samples", "need at least 2".into());
        }
        if !(w.margin > 0.0) || !(w.eig_step > 0.0) {
            bad("waveop", "margin", "margin and eig_step must be positive".into());
        }
        if w.decay_times.is_empty() || w.decay_times.iter().any(|t| *t == 0.0 || !t.is_finite()) {
            bad("waveop", "decay_times", "need nonzero finite times".into());
        }
        if w.theta_eps.len() < 2 || w.theta_eps.iter().any(|e| !(*e > 0.0)) {
            bad("waveop", "theta_eps", "need at least two positive values".into());
        }
        for s in &w.state {
            if !(s.half_width > 0.0) {
                bad("waveop", "state", format!("channel {}: half_width must be positive", s.channel));
            }
        }

        if problems.is_empty() {
            return Ok(());
        }
        let mut msg = String::new();
        for (line, p) in problems {
            match line {
                Some(l) => writeln!(msg, "line {l}: {p}").unwrap(),
                None => writeln!(msg, "{p}").unwrap(),
            }
        }
        Err(CliError::Validation(msg.trim_end().to_string()))
    }
}

fn in_zone(k: f64) -> bool {
    (-0.5..=0.5).contains(&k)
}

/// 1-based line of `key = ...` inside `[section]`, if present.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        let k = line.split('=').next().unwrap_or("").trim();
        if current == section && k == key {
            return Some(i + 1);
        }
    }
    // the table itself, for keys that are missing
    text.lines().position(|l| l.trim() == format!("[{section}]")).map(|i| i + 1)
}
