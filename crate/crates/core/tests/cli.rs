use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(cmd: &str, config: &str, dir: &Path) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_kapitza-cell"))
        .args([cmd, "--config", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()])
        .env("KAPITZA_CELL_THREADS", "2")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_passes_with_defaults() {
    let dir = TempDir::new().unwrap();
    let o = run("verify", "phases.lambda_plus = 2.0\n", dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("out/verify.txt")).unwrap();
    assert!(report.lines().any(|l| l.starts_with("PASS") && l.contains("−2π")), "{report}");
    assert!(!report.contains("FAIL"));
}

#[test]
fn sweep_with_one_epsilon_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = run("sweep", "run.eps = 0.1\n", dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.eps"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn under_resolved_green_fails_verification() {
    let dir = TempDir::new().unwrap();
    let o = run("greens-check", "greens.real_cutoff = 0.3\ngreens.fourier_cutoff = 0.5\n", dir.path());
    assert_eq!(o.status.code(), Some(4));
    let report = fs::read_to_string(dir.path().join("out/greens-check.txt")).unwrap();
    assert!(report.contains("FAIL"));
}

#[test]
fn negative_conductivity_names_line_and_key() {
    let dir = TempDir::new().unwrap();
    let o = run("solve", "discretization.n = 64\nphases.lambda_minus = -1\n", dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("phases.lambda_minus"), "{err}");
}

#[test]
fn unresolved_boundary_is_a_solver_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = "shape.kind = star\nshape.m = 0.12\nshape.w = 8\nphases.lambda_plus = 10\n\
               discretization.n = 16\nrun.eps = 0.2, 0.1, 0.05\n";
    let o = run("sweep", cfg, dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!dir.path().join("out/results.csv").exists());
}

#[test]
fn sweep_output_is_deterministic() {
    let cfg = "shape.kind = ellipse\nshape.a = 1.2\nshape.b = 0.8\nphases.lambda_plus = 4\n\
               discretization.n = 96\nrun.eps = 0.2, 0.1, 0.05\n";
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(run("sweep", cfg, a.path()).status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_kapitza-cell"))
        .args(["sweep", "--config", a.path().join("run.cfg").to_str().unwrap()])
        .args(["--out", b.path().to_str().unwrap()])
        .env("KAPITZA_CELL_THREADS", "5")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    for f in ["results.csv", "summary.json", "plot.svg"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn limit_writes_both_formulas_at_zero_r_star() {
    let dir = TempDir::new().unwrap();
    let o = run("limit", "rho.model = constant\nrho.rho0 = 2\ndiscretization.n = 64\n", dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/limit.json")).unwrap()).unwrap();
    let l = json["lambda"][0][0].as_f64().unwrap();
    let alt = json["lambda_exterior_neumann"][0][0].as_f64().unwrap();
    assert!((l + 2.0 * std::f64::consts::PI).abs() < 1e-9 && (l - alt).abs() < 1e-9);
}
