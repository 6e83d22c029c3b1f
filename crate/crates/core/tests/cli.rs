use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smallnoise"))
}

fn configs() -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

#[test]
fn kernel_info_for_epanechnikov() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["kernel-info", "--override", "kernel.family=epanechnikov", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("support     [-1, 1]"), "{stdout}");
    assert!(stdout.contains("order       1"), "{stdout}");
    assert!(stdout.contains("∫G²         0.600000000000"), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["results"]["order"], 1);
    assert!((report["results"]["int_g_squared"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    assert!(dir.path().join("data/kernel.csv").exists());
}

#[test]
fn unknown_subcommand_prints_usage_and_fails() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("Usage"), "{stderr}");
}

#[test]
fn missing_config_is_an_error() {
    let out = bin().arg("rates").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_reports_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "master_seed = 1\n[model]\nx0 = \"one\"\n").unwrap();
    let out = bin().arg("simulate").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("line 3") || stderr.contains("x0"), "{stderr}");
}

#[test]
fn unbounded_sigma2_fails_model_validation() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("simulate")
        .arg("--config")
        .arg(configs().join("simulate.toml"))
        .args(["--override", "model.sigma2.family=identity", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("[FAIL] model condition Sigma2Bounded"), "{stdout}");
}

#[test]
fn estimate_writes_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("estimate")
        .arg("--config")
        .arg(configs().join("estimate.toml"))
        .args(["--seed", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("data/estimate.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,j_hat,theta_hat,theta_true,x_limit");
    assert_eq!(csv.lines().count(), 102);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["master_seed"], 3);
}

#[test]
fn simulate_then_lemma_check_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("simulate")
        .arg("--config")
        .arg(configs().join("simulate.toml"))
        .args([
            "--override",
            "n_replicates=3",
            "--override",
            "grid.n_steps=300",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let paths = std::fs::read_to_string(dir.path().join("data/paths.csv")).unwrap();
    assert_eq!(paths.lines().count(), 1 + 3 * 301);

    let out = bin()
        .arg("lemma-check")
        .arg("--config")
        .arg(configs().join("deviation_general.toml"))
        .args(["--override", "n_replicates=50", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        stdout.lines().filter(|l| l.starts_with("[PASS]")).count(),
        2,
        "{stdout}"
    );
}
