use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hedac_core::scenarios::{self, Scripted};
use hedac_core::synthetic::grid_mesh;

fn hedac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hedac"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn short_rugged(dir: &Path, duration: f64) -> PathBuf {
    let mut s = scenarios::rugged();
    s.config.duration = duration;
    s.write(dir).unwrap()
}

fn with_height(name: &'static str, h: fn(f64, f64) -> f64) -> Scripted {
    let mut s = scenarios::rugged();
    s.name = name;
    s.config.mesh = format!("{name}.msh").into();
    s.mesh = grid_mesh((0.0, 0.0), (850.0, 850.0), (20, 20), h, &[]);
    s
}

fn edit(path: &Path, from: &str, to: &str) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains(from), "{from} not in config");
    std::fs::write(path, text.replacen(from, to, 1)).unwrap();
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_accepts_scripted_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_rugged(dir.path(), 900.0);
    let before = std::fs::read_dir(dir.path()).unwrap().count();
    let o = hedac(&["validate", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("valid"));
    assert!(out.contains("900 steps"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), before);
}

#[test]
fn validate_rejects_zero_dt() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_rugged(dir.path(), 10.0);
    edit(&cfg, "dt = 1.0", "dt = 0.0");
    let o = hedac(&["validate", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`dt`"), "{}", stderr(&o));
}

#[test]
fn validate_rejects_h_min_above_h_goal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_rugged(dir.path(), 10.0);
    edit(&cfg, "h_min = 30.0", "h_min = 60.0");
    let o = hedac(&["validate", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("h_min") && err.contains("h_goal"), "{err}");
}

#[test]
fn validate_reports_missing_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_rugged(dir.path(), 10.0);
    std::fs::remove_file(dir.path().join("rugged.msh")).unwrap();
    let o = hedac(&["validate", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rugged.msh"));
}

#[test]
fn incline_flat_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_height("flat", |_, _| 10.0).write(dir.path()).unwrap();
    let o = hedac(&["incline", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("κ_T,max [°] 0.0"), "{out}");
    assert!(out
        .lines()
        .any(|l| l.starts_with("A") && l.contains("76.9")));
}

#[test]
fn incline_one_row_per_type() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenarios::crater().write(dir.path()).unwrap();
    let o = hedac(&["incline", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with("κ"))
        .collect();
    assert_eq!(rows.len(), 2, "{out}");
    assert!(rows[0].starts_with("A") && rows[1].starts_with("B"));
}

#[test]
fn steep_terrain_needs_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_height("steep", |x, _| 5.0 * x)
        .write(dir.path())
        .unwrap();
    let o = hedac(&["incline", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("no"));
    let o = hedac(&["incline", "--config", p(&cfg), "--override-incline"]);
    assert_eq!(o.status.code(), Some(0));
    let o = hedac(&["validate", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("incline"), "{}", stderr(&o));
}

#[test]
fn run_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_rugged(dir.path(), 6.0);
    let run = dir.path().join("run");
    let o = hedac(&[
        "run",
        "--config",
        p(&cfg),
        "--out",
        p(&run),
        "--snapshot-stride",
        "3",
        "--seed",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("constraint violations  0"));
    for step in [0, 3, 6] {
        assert!(run.join(format!("coverage_{step:06}.csv")).is_file());
    }
    let plots = dir.path().join("plots");
    let o = hedac(&["export-plots", "--run", p(&run), "--out", p(&plots)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 13);
    let eta = std::fs::read_to_string(plots.join("eta.csv")).unwrap();
    assert_eq!(eta.lines().count(), 1 + 6);
    let alt = std::fs::read_to_string(plots.join("uav2_altitude.csv")).unwrap();
    assert_eq!(
        alt.lines().next().unwrap(),
        "t,z,z_t,h_min_band,h_goal_band"
    );
}

#[test]
fn export_of_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = hedac(&[
        "export-plots",
        "--run",
        p(dir.path()),
        "--out",
        p(&dir.path().join("plots")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("plots").exists());
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_rugged(dir.path(), 2.0);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = hedac(&["run", "--config", p(&cfg), "--out", p(&blocker.join("run"))]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn narrow_fov_warns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenarios::narrow_fov(10.0).write(dir.path()).unwrap();
    let o = hedac(&["validate", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
}

#[test]
fn config_path_is_required() {
    let o = hedac(&["validate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--config"));
}
