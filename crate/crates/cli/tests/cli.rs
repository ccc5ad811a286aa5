use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bhchain"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .env_remove("BHCHAIN_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

const SMALL: &str = "\
[chain]
N = 6
delta_base = 0.5
epsilon_base = 2.0

[integrator]
t_max = 40.0

[sweep]
delta_range = [0.0, 0.5]
epsilon_range = [1.0, 2.0]
delta_points = 2
epsilon_points = 2
workers = 1
";

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn sweep_on_two_by_two_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = run(dir.path(), &["sweep", "-c", &cfg, "-o", "a"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path().join("a/phase_diagram.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "delta,epsilon,phase,mean_density,max_fluct,outcome");
    assert_eq!(lines.len(), 5);
    assert!(!csv.contains('\r'));
    let nu = read(dir.path().join("a/winding_profiles.csv"));
    assert_eq!(nu.lines().count(), 1 + 4 * 6);
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path().join("a/manifest.json"))).unwrap();
    assert_eq!(manifest["config"]["chain"]["N"], 6);
    assert_eq!(manifest["command"], "sweep");

    // identical output on a rerun with a different worker count
    let out = run(dir.path(), &["sweep", "-c", &cfg, "-o", "b", "--workers", "2"]);
    assert!(out.status.success());
    assert_eq!(csv, read(dir.path().join("b/phase_diagram.csv")));
}

#[test]
fn oracle_rows_and_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["oracle", "--set", "chain.N=1", "--set", "chain.profile=homogeneous", "--set", "chain.delta_base=1", "--set", "chain.epsilon_base=1"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path().join("out/oracle.csv"));
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for r in &rows[1..] {
        assert!(r[1] <= r[2], "err_gaussian {} > err_meanfield {}", r[1], r[2]);
    }
}

#[test]
fn winding_without_kerr_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = run(dir.path(), &["winding", "-c", &cfg, "--set", "chain.kerr=0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path().join("out/winding_profile.csv"));
    let nu: Vec<&str> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(nu, vec!["0"; 6]);
}

#[test]
fn simulate_writes_trajectory_state_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = run(dir.path(), &["simulate", "-c", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = read(dir.path().join("out/trajectory.csv"));
    assert!(traj.starts_with("t,j,re_alpha,im_alpha,g_jj\n"));
    assert_eq!((traj.lines().count() - 1) % 6, 0);
    let report: serde_json::Value = serde_json::from_str(&read(dir.path().join("out/report.json"))).unwrap();
    assert_eq!(report["outcome"], "converged");
    let state: serde_json::Value = serde_json::from_str(&read(dir.path().join("out/state.json"))).unwrap();
    assert_eq!(state["g"].as_array().unwrap().len(), 6);
}

#[test]
fn green_dump_has_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = run(dir.path(), &["green", "-c", &cfg, "--max-distance", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path().join("out/green.csv"));
    assert!(csv.starts_with("row,col,re,im\n"));
    assert_eq!(csv.lines().count(), 1 + 12 * 12);
    assert_eq!(read(dir.path().join("out/correlation_profile.csv")).lines().count(), 1 + 4);
}

#[test]
fn config_errors_exit_nonzero_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[chain]\nN = 6\ndelta_base = 0.5\n");
    let out = run(dir.path(), &["simulate", "-c", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon_base"));
    assert!(!dir.path().join("out").exists());

    let cfg = write_config(dir.path(), &SMALL.replace("t_max = 40.0", "t_max = oops"));
    let out = run(dir.path(), &["sweep", "-c", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn worker_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_bhchain"))
        .args(["sweep", "-c", &cfg, "--set", "sweep.delta_points=1", "--set", "sweep.epsilon_points=1"])
        .current_dir(dir.path())
        .env("BHCHAIN_WORKERS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path().join("out/manifest.json"))).unwrap();
    assert_eq!(manifest["config"]["sweep"]["workers"], 3);
}
