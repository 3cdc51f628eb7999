use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SMALL: &str = "[cutoffs]\nmodes = 8\nv_cutoff = 16\nsamples = 1024\n";

fn halfspace(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfspace")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn setup(config: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), format!("{config}\n{SMALL}")).unwrap();
    dir
}

fn run_ok(dir: &TempDir, cmd: &str) {
    let out = halfspace(&[cmd, "--config", "run.toml", "--out", "out"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(dir: &TempDir, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.path().join("out").join(name)).unwrap()).unwrap()
}

fn csv_rows(dir: &TempDir, name: &str) -> Vec<csv::StringRecord> {
    let text = std::fs::read_to_string(dir.path().join("out").join(name)).unwrap();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.records().map(|r| r.unwrap()).collect()
}

fn constant(v: f64, fiber: &str, lambda: &str) -> String {
    format!("[potential]\nkind = \"constant\"\nvalue = {v:?}\n\n[fiber]\n{fiber}\n\n[lambda]\n{lambda}\n")
}

#[test]
fn constant_potential_eigenvalues() {
    let dir = setup(&constant(-1.0, "k = 0.0", "from = 2.0\nto = 10.0"));
    run_ok(&dir, "spectrum");
    let v = json(&dir, "spectrum_k000.json");
    let ls: Vec<f64> = v["data"]["eigenvalues"].as_array().unwrap().iter().map(|e| e["lambda"].as_f64().unwrap()).collect();
    assert_eq!(ls.len(), 2, "{ls:?}");
    assert!((ls[0] - 3.0).abs() < 1e-8 && (ls[1] - 8.0).abs() < 1e-8, "{ls:?}");
    assert_eq!(v["meta"]["cutoffs"]["modes"], 8);
    assert_eq!(v["meta"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn zero_potential_has_no_eigenvalues() {
    let dir = setup(&constant(0.0, "k = 0.1", "from = 0.5\nto = 6.0"));
    run_ok(&dir, "spectrum");
    assert!(json(&dir, "spectrum_k000.json")["data"]["eigenvalues"].as_array().unwrap().is_empty());
}

#[test]
fn k_grid_gives_one_file_per_fiber() {
    let dir = setup(&constant(-1.0, "k_grid = { from = -0.5, to = 0.5, points = 5 }", "from = 0.5\nto = 3.0"));
    run_ok(&dir, "spectrum");
    let mut names: Vec<String> = std::fs::read_dir(dir.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("spectrum_"))
        .collect();
    names.sort();
    assert_eq!(names, (0..5).map(|i| format!("spectrum_k{i:03}.json")).collect::<Vec<_>>());
    let ks: Vec<f64> = names.iter().map(|n| json(&dir, n)["meta"]["k"].as_f64().unwrap()).collect();
    assert_eq!(ks, vec![-0.5, -0.25, 0.0, 0.25, 0.5]);
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = setup(&constant(1.0, "k = 0.0", "from = 0.5\nto = 3.0\npoints = 0"));
    let out = halfspace(&["smatrix", "--config", "run.toml", "--out", "out"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lambda.points") && err.contains("empty"), "{err}");

    let dir = setup(&constant(1.0, "k = 0.75", "from = 0.5\nto = 3.0"));
    let out = halfspace(&["spectrum", "--config", "run.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 6: fiber.k"));

    let out = halfspace(&["report", "--out", "does-not-exist"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not a directory"));
}

#[test]
fn smatrix_scan_and_threshold_files() {
    let dir = setup(&constant(1.0, "k = 0.25", "from = 0.3\nto = 2.0\npoints = 35"));
    run_ok(&dir, "smatrix");
    let rows = csv_rows(&dir, "smatrix_k000.csv");
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[5].parse::<f64>().unwrap() < 1e-10));
    // λ_{-1} = 0.5625 and λ_1 = 1.5625 lie in the range
    for j in 0..2 {
        let t = json(&dir, &format!("threshold_k000_{j:02}.json"));
        let sides = t["data"]["sides"].as_array().unwrap();
        assert_eq!(sides.len(), 2);
        for s in sides {
            assert!(s["error"].is_null(), "{s}");
            assert!(s["scan"]["deviation"].as_f64().unwrap() < 1e-5);
        }
        assert!(t["data"]["max_identity_residual"].as_f64().unwrap() < 1e-8);
    }
}

#[test]
fn waveop_tables() {
    let dir = setup(&constant(-1.0, "k = 0.2", "from = 0.1\nto = 2.0"));
    run_ok(&dir, "waveop");
    let hs = csv_rows(&dir, "hs_norm_k000.csv");
    assert!(!hs.is_empty());
    assert!(hs.iter().all(|r| (r[2].parse::<f64>().unwrap() - 0.70711).abs() < 1e-5));
    let pieces = csv_rows(&dir, "wave_k000.csv");
    assert!(pieces.iter().all(|r| r[2].parse::<f64>().unwrap() == 0.0));
    let decay = csv_rows(&dir, "appendix_decay.csv");
    let td: Vec<(f64, f64)> = decay.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    let fwd: Vec<f64> = td.iter().filter(|p| p.0 > 0.0).map(|p| p.1).collect();
    let back: Vec<f64> = td.iter().filter(|p| p.0 < 0.0).map(|p| p.1).rev().collect();
    assert!(fwd.windows(2).all(|w| w[1] < w[0]) && back.windows(2).all(|w| w[1] < w[0]), "{td:?}");
}

#[test]
fn report_statuses() {
    let dir = setup(&constant(-1.0, "k = 0.0", "from = 2.0\nto = 10.0\npoints = 41"));
    run_ok(&dir, "spectrum");
    run_ok(&dir, "smatrix");
    let out = halfspace(&["report", "--out", "out"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&dir, "summary.json")["status"], "pass");

    let trig = "[potential]\nkind = \"trig\"\na0 = 0.3\ncos = [0.8, -0.4]\nsin = [0.5]\n\n[fiber]\nk = 0.25\n\n[lambda]\nfrom = 0.3\nto = 1.0\npoints = 21\n";
    let dir = setup(trig);
    run_ok(&dir, "smatrix");
    let out = halfspace(&["report", "--out", "out"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let s = json(&dir, "summary.json");
    assert_eq!(s["status"], "pass-with-warnings");
    assert!(s.to_string().contains("relaxed tolerance 1.0e-5"));
    assert!(std::fs::read_to_string(dir.path().join("out/summary.txt")).unwrap().starts_with("status: pass-with-warnings"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = setup(&constant(1.0, "k_grid = { from = 0.0, to = 0.5, points = 3 }", "from = 0.3\nto = 2.0\npoints = 25"));
    for (out, jobs) in [("a", "1"), ("b", "3")] {
        let o = halfspace(&["smatrix", "--config", "run.toml", "--out", out, "--jobs", jobs], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let mut names: Vec<_> = std::fs::read_dir(dir.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 6);
    for n in names {
        let a = std::fs::read(dir.path().join("a").join(&n)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(&n)).unwrap();
        assert!(a == b, "{n:?} differs");
    }
}

#[test]
fn seed_flag_changes_random_potential_and_hash() {
    let cfg = "[potential]\nkind = \"random\"\ndegree = 2\namplitude = 1.0\noffset = 2.5\n\n[fiber]\nk = 0.1\n\n[lambda]\nfrom = 0.5\nto = 1.5\npoints = 5\n";
    let dir = setup(cfg);
    for (out, seed) in [("a", "1"), ("b", "2")] {
        let o = halfspace(&["smatrix", "--config", "run.toml", "--out", out, "--seed", seed], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let meta = |d: &str| {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(d).join("smatrix_k000.json")).unwrap()).unwrap();
        v["meta"].clone()
    };
    assert_ne!(meta("a")["config_hash"], meta("b")["config_hash"]);
    assert_eq!(meta("b")["seed"], 2);
}
