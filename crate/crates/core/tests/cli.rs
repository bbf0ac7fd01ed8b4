use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hetturing"));
    c.env_remove("TC_WORKERS");
    c
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).display().to_string()
}

fn code(c: &mut Command) -> i32 {
    c.output().expect("binary runs").status.code().expect("exit code")
}

#[test]
fn dispersion_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["dispersion", "--config", &config("dispersion.json"), "--set", "sweeps.0.count=5"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["dispersion.csv", "summary.json", "timings.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let csv = std::fs::read_to_string(dir.path().join("dispersion.csv")).unwrap();
    assert!(csv.starts_with("m,gamma,lambda_max,root_low,root_high"));
    // modes 0..=10 at 5 gammas
    assert_eq!(csv.lines().count(), 1 + 11 * 5);
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(code(bin().args(["dispersion", "--config", "/nonexistent.json", "--out", "/tmp/x"])), 1);
    assert_eq!(code(bin().args(["frobnicate"])), 1);
    assert_eq!(code(bin().args(["dispersion"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let cfg = config("dispersion.json");
    assert_eq!(code(bin().args(["dispersion", "--config", &cfg, "--out", &out, "--set", "model.bogus=1"])), 1);
    assert_eq!(code(bin().args(["dispersion", "--config", &cfg, "--out", &out, "--set", "model.beta0=2"])), 1);
    assert_eq!(code(bin().args(["dispersion", "--config", &cfg, "--out", &out, "--set", "noequals"])), 1);
    // the config names a different experiment
    assert_eq!(code(bin().args(["simulate", "--config", &cfg, "--out", &out])), 1);
    assert_eq!(code(bin().args(["dispersion", "--config", &cfg, "--out", &out]).env("TC_WORKERS", "zero")), 1);
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(bin().arg("--help")), 0);
    assert_eq!(code(bin().args(["fold-scan", "--help"])), 0);
}

#[test]
fn unresolved_cells_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["fold-scan", "--config", &config("schnak_scan.json")])
        .args(["--set", "sweeps.0.min=0.8", "--set", "sweeps.0.max=0.9", "--set", "sweeps.0.count=2"])
        .args(["--set", "sweeps.1.min=1", "--set", "sweeps.1.max=9", "--set", "sweeps.1.count=2"])
        .args(["--set", "numerics.continuation.max_points=3"])
        .arg("--out")
        .arg(dir.path())
        .env("TC_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["counts"]["unresolved"], 4);
    let timings: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("timings.json")).unwrap()).unwrap();
    assert_eq!(timings["workers"], 2.0);
}

#[test]
fn seed_flag_reaches_the_run() {
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let status = bin()
            .args(["simulate", "--config", &config("simulate.json"), "--seed", seed, "--set", "model.gamma=0.3"])
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap()
            .status;
        assert_eq!(status.code(), Some(0));
        let s: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        s
    };
    let (a, b) = (run("5"), run("5"));
    assert_eq!(a["seed"], 5);
    assert_eq!(a["integration"], b["integration"]);
}
