use std::process::Command;

fn rvmb() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rvmb"))
}

#[test]
fn kernel_means_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = rvmb().args(["--threads", "1", "--out"]).arg(dir.path()).args(["kernel-means", "--set", "tuples=10"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS kernel_a_mean")));
    let run = dir.path().join("kernel-means");
    let manifest = std::fs::read_to_string(run.join("manifest.txt")).unwrap();
    assert!(manifest.contains("tuples = 10"));
    assert!(manifest.contains("[tolerances]"));
    let report = std::fs::read_to_string(run.join("report.csv")).unwrap();
    assert!(report.starts_with("check,value,tolerance,passed\n"));
    assert!(std::fs::read_dir(&run).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv")).count() >= 2);
}

#[test]
fn malformed_overrides_exit_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["tuples", "tuples=ten", "no_such_key=1"] {
        let out = rvmb().arg("--out").arg(dir.path()).args(["kernel-means", "--set", bad]).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{bad}");
    }
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn malformed_config_file_exits_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "tol 1e-8\n").unwrap();
    let out = rvmb().arg("--out").arg(dir.path().join("out")).arg("--config").arg(&cfg).arg("kernel-means").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn show_config_lists_defaults() {
    let out = rvmb().args(["--show-config", "simulate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("n_particles = 20000"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(rvmb().arg("frobnicate").output().unwrap().status.code(), Some(2));
    assert_eq!(rvmb().arg("--help").output().unwrap().status.code(), Some(0));
}
