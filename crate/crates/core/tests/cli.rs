use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn kpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpp-stefan"))
        .args(args)
        .env("KPP_STEFAN_THREADS", "1")
        .output()
        .unwrap()
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_and_config_errors_exit_two() {
    assert_eq!(kpp(&[]).status.code(), Some(2));
    assert_eq!(kpp(&["simulate", "--config", "/nonexistent/x.toml"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[problem]\nfamily = \"beverton_holt\"\nwhat = 1\n").unwrap();
    assert_eq!(kpp(&["simulate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn invalid_parameters_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kpp(&["semiwave", "--config", &cfg("semiwave.toml"), "--out", out, "--set", "problem.p=0.5"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = kpp(&["simulate", "--config", &cfg("spreading.toml"), "--out", out.to_str().unwrap(), "--dry-run"]);
    assert!(o.status.success());
    assert!(!out.exists());
}

#[test]
fn semiwave_slope_at_zero_speed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kpp(&["semiwave", "--config", &cfg("semiwave.toml"), "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("semiwave.json"));
    let slope = v["qprime0"].as_f64().unwrap();
    assert!((slope - 0.476876).abs() < 1e-3, "{slope}");
    let profile = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(profile.starts_with("z,q"));
}

#[test]
fn classify_reports_vanishing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kpp(&["classify", "--config", &cfg("vanish.toml"), "--out", out]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict: Vanishing"));
    assert_eq!(json(&dir.path().join("verdict.json"))["verdict"], "Vanishing");
}

#[test]
fn simulate_is_deterministic() {
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let o = kpp(&[
                "simulate",
                "--config",
                &cfg("spreading.toml"),
                "--out",
                dir.path().to_str().unwrap(),
                "--set",
                "numerics.t_end=5",
                "--set",
                "numerics.n_cells=100",
            ]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            let files: Vec<Vec<u8>> = ["trajectory.csv", "snapshots.csv", "summary.json"]
                .iter()
                .map(|f| std::fs::read(dir.path().join(f)).unwrap())
                .collect();
            files
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let header = String::from_utf8_lossy(&runs[0][0]);
    assert!(header.starts_with("t,g,h,gprime,hprime,sup_u"));
}

#[test]
fn compare_and_characteristic_produce_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kpp(&["compare", "--config", &cfg("compare.toml"), "--out", out, "--set", "numerics.t_end=4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&dir.path().join("ordering.json"))["violations"], 0);

    let o = kpp(&["characteristic", "--config", &cfg("characteristic.toml"), "--out", out]);
    assert!(o.status.success());
    let table = std::fs::read_to_string(dir.path().join("characteristic.csv")).unwrap();
    assert_eq!(table.lines().count(), 6);
}
