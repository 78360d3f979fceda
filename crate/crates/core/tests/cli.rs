use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wave_esc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wave-esc")).args(args).output().expect("spawn wave-esc")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_trace_report_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "# short run\ntime.horizon = 10\ntime.stride = 50\n");
    let out = dir.path().join("out");
    let res = wave_esc(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("t,y,theta,Theta,U,G_hat,H_hat,vartheta,Omega,V"));
    assert_eq!(lines.count(), 2000 / 50 + 1);

    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.lines().any(|l| l == "rows=41"), "{report}");
    let canonical = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(canonical.contains("time.stride"));
}

#[test]
fn run_rejects_bad_config_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "probe.frequency = 3.14159265\n");
    let res = wave_esc(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 1"));

    let cfg = write_config(dir.path(), "probe.amplitude = 0.1\nprobe.amplitud = 0.2\n");
    let res = wave_esc(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 2"));
}

#[test]
fn run_reports_blowup_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "control.washout = 0\ncontrol.hessian_filter = 0\nplant.initial = rest\ntime.horizon = 10\n",
    );
    let res = wave_esc(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn sweep_writes_points_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "time.stride = 100\n");
    let out = dir.path().join("sweep");
    let res = wave_esc(&[
        "sweep",
        "--config",
        &cfg,
        "--axis",
        "probe.amplitude=0.05,0.1,0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for i in 0..3 {
        assert!(out.join(format!("point_{i:03}")).join("trace.csv").exists());
    }
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "sup_y_err").unwrap();
    let sups: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(sups.len(), 3);
    assert!(sups.windows(2).all(|w| w[1] > w[0]), "{sups:?}");
}

#[test]
fn verify_passes_on_defaults() {
    let res = wave_esc(&["verify", "kernels", "trajectory", "averaging"]);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(res.status.success(), "{stdout}");
    assert!(stdout.contains("0 failed"));
}

#[test]
fn verify_rejects_unknown_group() {
    assert_eq!(wave_esc(&["verify", "nonsense"]).status.code(), Some(1));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(wave_esc(&["launch"]).status.code(), Some(1));
}
