//! Aggregates the JSON outputs of earlier runs into one verdict.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

pub const HS_TARGET: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    PassWithWarnings,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub file: String,
    pub kind: String,
    pub status: Status,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub kind: &'static str,
    pub status: Status,
    pub config_hashes: Vec<String>,
    pub checks: Vec<Check>,
}

struct Judge {
    status: Status,
    notes: Vec<String>,
}

impl Judge {
    fn new() -> Self {
        Self { status: Status::Pass, notes: vec![] }
    }

    fn fail(&mut self, note: String) {
        self.status = Status::Fail;
        self.notes.push(note);
    }

    fn warn(&mut self, note: String) {
        self.status = self.status.max(Status::PassWithWarnings);
        self.notes.push(note);
    }

    fn info(&mut self, note: String) {
        self.notes.push(note);
    }
}

fn f(v: &Value, key: &str) -> f64 {
    v.get(key).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

fn arr<'a>(v: &'a Value, key: &str) -> &'a [Value] {
    v.get(key).and_then(Value::as_array).map(Vec::as_slice).unwrap_or(&[])
}

fn judge_spectrum(d: &Value, j: &mut Judge) {
    let n = arr(d, "eigenvalues").len();
    j.info(format!("{n} eigenvalue(s)"));
    if !arr(d, "near_threshold").is_empty() {
        j.warn(format!("unresolved dips near thresholds: {:?}", arr(d, "near_threshold")));
    }
}

fn judge_smatrix(d: &Value, j: &mut Judge) {
    let defect = f(d, "max_unitarity_defect");
    let tol = f(d, "unitarity_tolerance");
    if !(defect <= tol) {
        j.fail(format!("unitarity defect {defect:.2e} exceeds {tol:.1e}"));
    } else if let Some(note) = d.get("tolerance_note").and_then(Value::as_str) {
        j.warn(format!("unitarity checked against relaxed tolerance {tol:.1e} ({note}); defect {defect:.2e}"));
    } else {
        j.info(format!("unitarity defect {defect:.2e} ≤ {tol:.1e}"));
    }
    let skipped = arr(d, "skipped").len();
    if skipped > 0 {
        j.info(format!("{skipped} grid point(s) skipped"));
    }
}

fn judge_threshold(d: &Value, j: &mut Judge) {
    let res = f(d, "max_identity_residual");
    if !(res <= 1e-8) {
        j.fail(format!("cascade identity residual {res:.2e}"));
    }
    for c in arr(d, "compare") {
        let e = f(c, "rel_error");
        if !(e <= 1e-6) {
            j.fail(format!("cascade vs direct inversion at |κ| = {}: {e:.2e}", f(c, "kappa")));
        }
    }
    for s in arr(d, "sides") {
        let side = s.get("side").and_then(Value::as_str).unwrap_or("?");
        if let Some(e) = s.get("error").and_then(Value::as_str) {
            j.fail(format!("{side}: {e}"));
        }
        if let Some(scan) = s.get("scan").filter(|v| !v.is_null()) {
            let dev = f(scan, "deviation");
            if !(dev <= 1e-5) {
                j.fail(format!("{side} limit deviates from the scan by {dev:.2e}"));
            }
            let sizes = arr(scan, "mixed_sizes");
            let nontrivial = sizes.iter().any(|x| x.as_f64().unwrap_or(0.0) > 1e-12);
            if let Some(slope) = scan.get("mixed_slope").and_then(Value::as_f64).filter(|_| nontrivial) {
                if (slope - 0.5).abs() > 0.15 {
                    j.warn(format!("{side} mixed entries decay with exponent {slope:.3}"));
                }
            }
        }
    }
}

fn judge_eigexp(d: &Value, j: &mut Judge) {
    for e in arr(d, "entries") {
        for c in arr(e, "compare") {
            let r = f(c, "rel_error");
            if !(r <= 1e-6) {
                j.fail(format!("expansion vs direct inversion at |κ| = {}: {r:.2e}", f(c, "kappa")));
            }
        }
        let dev = f(e, "limit_deviation");
        if !(dev <= 1e-5) {
            j.warn(format!("boundary limit vs extrapolation {dev:.2e}"));
        }
    }
}

fn judge_waveop(d: &Value, j: &mut Judge) {
    for h in arr(d, "hs") {
        let v = f(h, "hs_norm");
        if !((v - HS_TARGET).abs() <= 1e-5) {
            j.fail(format!("HS norm of C_({},{}) is {v}", h["n"], h["n_prime"]));
        }
    }
    let rep = &d["report"];
    let (q, bound) = (f(rep, "remainder_norm"), f(rep, "remainder_bound"));
    if !(q <= bound * (1.0 + 1e-9) + 1e-15) {
        j.fail(format!("remainder norm {q:.3e} above its bound {bound:.3e}"));
    }
    j.info(format!("‖Q_kξ‖ = {q:.3e}, leading part {:.3e}", f(rep, "leading_norm")));
    let decay: Vec<f64> = arr(rep, "decay").iter().filter_map(|p| p.get(1).and_then(Value::as_f64)).collect();
    if q > 0.0 && !decay.windows(2).all(|w| w[1] < w[0]) {
        j.warn(format!("‖Q_k e^(-itλ)ξ‖ not decreasing: {decay:?}"));
    }
}

fn judge_appendix(d: &Value, j: &mut Judge) {
    for side in ["forward", "backward"] {
        let s = &d[side];
        if !s.get("strictly_decreasing").and_then(Value::as_bool).unwrap_or(false) {
            j.fail(format!("{side} decay curve is not strictly decreasing"));
        }
        if !s.get("truncated_at").is_none_or(Value::is_null) {
            j.fail(format!("{side} packet left the grid"));
        }
        let ratio = f(s, "ratio");
        if !(ratio < 0.1) {
            j.warn(format!("{side} decay ratio {ratio:.2e}"));
        }
    }
}

fn judge_theta(d: &Value, j: &mut Judge) {
    for item in d.as_array().map(Vec::as_slice).unwrap_or(&[]) {
        let defect = item.get(1).map(|r| f(r, "defect")).unwrap_or(f64::NAN);
        if !(defect < 1e-3) {
            j.fail(format!("Θ defect {defect:.2e}"));
        }
    }
}

pub fn summarize(dir: &Path) -> Result<Summary, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Validation(format!("report: {} is not a directory", dir.display())));
    }
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut checks = Vec::new();
    let mut hashes = BTreeSet::new();
    for path in files {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
        let Some(kind) = v.get("kind").and_then(Value::as_str) else { continue };
        let mut j = Judge::new();
        let d = &v["data"];
        match kind {
            "spectrum" => judge_spectrum(d, &mut j),
            "smatrix" => judge_smatrix(d, &mut j),
            "threshold" => judge_threshold(d, &mut j),
            "eigexp" => judge_eigexp(d, &mut j),
            "waveop" => judge_waveop(d, &mut j),
            "appendix" => judge_appendix(d, &mut j),
            "theta" => judge_theta(d, &mut j),
            _ => continue,
        }
        if let Some(h) = v["meta"].get("config_hash").and_then(Value::as_str) {
            hashes.insert(h.to_string());
        }
        let file = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        checks.push(Check { file, kind: kind.to_string(), status: j.status, notes: j.notes });
    }
    if checks.is_empty() {
        return Err(CliError::Validation(format!("report: no command outputs in {}", dir.display())));
    }
    let status = checks.iter().map(|c| c.status).max().unwrap_or(Status::Pass);
    Ok(Summary { kind: "summary", status, config_hashes: hashes.into_iter().collect(), checks })
}

pub fn render(s: &Summary) -> String {
    let word = |st: Status| match st {
        Status::Pass => "pass",
        Status::PassWithWarnings => "pass-with-warnings",
        Status::Fail => "FAIL",
    };
    let mut out = format!("status: {}\n", word(s.status));
    for c in &s.checks {
        writeln!(out, "{:<20} {:<28} {}", word(c.status), c.file, c.notes.join("; ")).unwrap();
    }
    out
}

/// Writes summary.json and summary.txt into `dir`.
pub fn run(dir: &Path) -> Result<Summary, CliError> {
    let s = summarize(dir)?;
    let mut json = serde_json::to_string_pretty(&s)?;
    json.push('\n');
    std::fs::write(dir.join("summary.json"), json)?;
    std::fs::write(dir.join("summary.txt"), render(&s))?;
    Ok(s)
}
