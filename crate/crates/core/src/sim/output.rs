//! Run artifacts: trajectory and metrics logs, nodal field snapshots,
//! summary, and plot-ready exports.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fields::ScalarField;
use crate::terrain::TerrainMesh;

use super::{SimError, Simulation, StepRecord, Summary, Violation};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const VIOLATIONS_FILE: &str = "violations.csv";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SimError + '_ {
    move |source| SimError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> SimError + '_ {
    move |e| SimError::Output(format!("{}: {e}", path.display()))
}

/// Writes a nodal field as `node_id,x,y,value`.
pub fn write_field_csv(
    path: &Path,
    mesh: &TerrainMesh,
    field: &ScalarField,
) -> Result<(), SimError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["node_id", "x", "y", "value"])
        .map_err(csv_err(path))?;
    for (i, (p, v)) in mesh.points().iter().zip(&field.values).enumerate() {
        w.serialize((i, p.x, p.y, v)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Serialize)]
struct TrajectoryRow<'a> {
    t: f64,
    uav_id: usize,
    x: f64,
    y: f64,
    z: f64,
    theta: f64,
    rho: f64,
    phi: f64,
    omega: f64,
    v_s: f64,
    v_z: f64,
    z_t: f64,
    source: &'a str,
}

#[derive(Debug, Deserialize)]
struct TrajectoryIn {
    t: f64,
    uav_id: usize,
    z: f64,
    rho: f64,
    phi: f64,
    omega: f64,
    v_s: f64,
    v_z: f64,
    z_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetInfo {
    pub name: String,
    pub h_min: f64,
    pub h_goal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub dt: f64,
    pub fleet: Vec<FleetInfo>,
    pub final_eta: f64,
    pub steps: usize,
    pub max_compute_seconds: f64,
    pub mean_compute_seconds: f64,
    pub escape_activations: usize,
    pub min_pairwise_clearance: Option<f64>,
    pub min_altitude_above_terrain: f64,
    pub violations: usize,
}

/// Streams a run into `dir`. Records are written as they are produced so a
/// failed run keeps its last consistent step.
pub struct RunWriter {
    dir: PathBuf,
    trajectory: csv::Writer<File>,
    metrics: csv::Writer<File>,
    snapshot_stride: usize,
}

impl RunWriter {
    pub fn create(dir: &Path, snapshot_stride: usize) -> Result<Self, SimError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let tp = dir.join(TRAJECTORY_FILE);
        let mp = dir.join(METRICS_FILE);
        let trajectory = csv::Writer::from_path(&tp).map_err(csv_err(&tp))?;
        let mut metrics = csv::Writer::from_path(&mp).map_err(csv_err(&mp))?;
        metrics
            .write_record(["t", "eta", "step_compute_seconds"])
            .map_err(csv_err(&mp))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            trajectory,
            metrics,
            snapshot_stride,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn record(&mut self, r: &StepRecord) -> Result<(), SimError> {
        let tp = self.dir.join(TRAJECTORY_FILE);
        for (i, u) in r.uavs.iter().enumerate() {
            let source = match u.source {
                None => "initial",
                Some(crate::mpc::ControlSource::Optimal) => "optimal",
                Some(crate::mpc::ControlSource::Escape) => "escape",
            };
            self.trajectory
                .serialize(TrajectoryRow {
                    t: r.t,
                    uav_id: i,
                    x: u.x,
                    y: u.y,
                    z: u.z,
                    theta: u.theta,
                    rho: u.rho,
                    phi: u.phi,
                    omega: u.omega,
                    v_s: u.v_s,
                    v_z: u.v_z,
                    z_t: u.z_t,
                    source,
                })
                .map_err(csv_err(&tp))?;
        }
        let mp = self.dir.join(METRICS_FILE);
        self.metrics
            .serialize((r.t, r.eta, r.compute_seconds))
            .map_err(csv_err(&mp))?;
        self.trajectory.flush().map_err(io_err(&tp))?;
        self.metrics.flush().map_err(io_err(&mp))
    }

    /// Writes the probability and coverage fields when the stride is due,
    /// or unconditionally with `force`.
    pub fn snapshot(&self, sim: &Simulation, force: bool) -> Result<(), SimError> {
        let step = sim.records().len() - 1;
        let due = self.snapshot_stride > 0 && step % self.snapshot_stride == 0;
        if !(due || force) {
            return Ok(());
        }
        let mesh = &sim.scenario().terrain.mesh;
        write_field_csv(
            &self.dir.join(format!("probability_{step:06}.csv")),
            mesh,
            sim.probability(),
        )?;
        write_field_csv(
            &self.dir.join(format!("coverage_{step:06}.csv")),
            mesh,
            sim.coverage(),
        )
    }

    /// Initial record and snapshot.
    pub fn start(&mut self, sim: &Simulation) -> Result<(), SimError> {
        self.record(&sim.records()[0])?;
        self.snapshot(sim, false)
    }

    /// Latest record plus any due snapshot.
    pub fn after_step(&mut self, sim: &Simulation) -> Result<(), SimError> {
        self.record(sim.records().last().expect("at least the initial record"))?;
        self.snapshot(sim, false)
    }

    /// Final snapshot, violations list and summary.
    pub fn finish(&mut self, sim: &Simulation) -> Result<RunSummary, SimError> {
        self.snapshot(sim, true)?;
        write_violations(&self.dir.join(VIOLATIONS_FILE), sim.violations())?;
        let s = run_summary(sim, &sim.summary());
        let path = self.dir.join(SUMMARY_FILE);
        let text = serde_json::to_string_pretty(&s).map_err(|e| SimError::Output(e.to_string()))?;
        std::fs::write(&path, text).map_err(io_err(&path))?;
        Ok(s)
    }
}

fn write_violations(path: &Path, v: &[Violation]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["step", "uav", "kind", "value", "bound"])
        .map_err(csv_err(path))?;
    for x in v {
        w.serialize(x).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn run_summary(sim: &Simulation, s: &Summary) -> RunSummary {
    RunSummary {
        dt: sim.scenario().dt,
        fleet: sim
            .scenario()
            .fleet
            .iter()
            .map(|(spec, _)| FleetInfo {
                name: spec.name.clone(),
                h_min: spec.h_min,
                h_goal: spec.h_goal,
            })
            .collect(),
        final_eta: s.final_eta,
        steps: s.steps,
        max_compute_seconds: s.max_compute_seconds,
        mean_compute_seconds: s.mean_compute_seconds,
        escape_activations: s.escape_activations,
        min_pairwise_clearance: s.min_pairwise_clearance,
        min_altitude_above_terrain: s.min_altitude_above_terrain,
        violations: s.violations,
    }
}

/// Converts a completed run directory into per-UAV control, velocity,
/// acceleration and altitude series plus an η series. One row per step.
/// Returns the written paths.
pub fn export_plots(run_dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    let sp = run_dir.join(SUMMARY_FILE);
    let text = std::fs::read_to_string(&sp).map_err(io_err(&sp))?;
    let summary: RunSummary = serde_json::from_str(&text)
        .map_err(|e| SimError::Output(format!("{}: {e}", sp.display())))?;
    let tp = run_dir.join(TRAJECTORY_FILE);
    let mut rdr = csv::Reader::from_path(&tp).map_err(csv_err(&tp))?;
    let n = summary.fleet.len();
    let mut per: Vec<Vec<TrajectoryIn>> = (0..n).map(|_| Vec::new()).collect();
    for row in rdr.deserialize::<TrajectoryIn>() {
        let row = row.map_err(csv_err(&tp))?;
        if row.uav_id >= n {
            return Err(SimError::Output(format!(
                "{}: unknown uav_id {}",
                tp.display(),
                row.uav_id
            )));
        }
        per[row.uav_id].push(row);
    }
    let mp = run_dir.join(METRICS_FILE);
    let mut rdr = csv::Reader::from_path(&mp).map_err(csv_err(&mp))?;
    let metrics: Vec<(f64, f64, f64)> = rdr
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(csv_err(&mp))?;
    if metrics.is_empty() || per.iter().any(|v| v.len() != metrics.len()) {
        return Err(SimError::Output(format!(
            "{} is incomplete",
            run_dir.display()
        )));
    }
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    let mut open =
        |name: String, header: &[&str]| -> Result<(csv::Writer<File>, PathBuf), SimError> {
            let p = out_dir.join(name);
            let mut w = csv::Writer::from_path(&p).map_err(csv_err(&p))?;
            w.write_record(header).map_err(csv_err(&p))?;
            written.push(p.clone());
            Ok((w, p))
        };
    let dt = summary.dt;
    for (i, rows) in per.iter().enumerate() {
        let info = &summary.fleet[i];
        let (mut c, cp) = open(
            format!("uav{i}_controls.csv"),
            &["t", "rho", "phi", "omega"],
        )?;
        let (mut v, vp) = open(format!("uav{i}_velocity.csv"), &["t", "v_s", "v_z"])?;
        let (mut a, ap) = open(format!("uav{i}_acceleration.csv"), &["t", "a_s", "a_z"])?;
        let (mut h, hp) = open(
            format!("uav{i}_altitude.csv"),
            &["t", "z", "z_t", "h_min_band", "h_goal_band"],
        )?;
        for w in rows.windows(2) {
            let (p, r) = (&w[0], &w[1]);
            c.serialize((r.t, r.rho, r.phi, r.omega))
                .map_err(csv_err(&cp))?;
            v.serialize((r.t, r.v_s, r.v_z)).map_err(csv_err(&vp))?;
            a.serialize((r.t, (r.v_s - p.v_s) / dt, (r.v_z - p.v_z) / dt))
                .map_err(csv_err(&ap))?;
            h.serialize((r.t, r.z, r.z_t, r.z_t + info.h_min, r.z_t + info.h_goal))
                .map_err(csv_err(&hp))?;
        }
        for (mut w, p) in [(c, cp), (v, vp), (a, ap), (h, hp)] {
            w.flush().map_err(io_err(&p))?;
        }
    }
    let (mut e, ep) = open("eta.csv".into(), &["t", "eta", "step_compute_seconds"])?;
    for m in &metrics[1..] {
        e.serialize(m).map_err(csv_err(&ep))?;
    }
    e.flush().map_err(io_err(&ep))?;
    Ok(written)
}
