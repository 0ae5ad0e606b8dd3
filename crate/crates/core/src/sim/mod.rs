//! Closed-loop survey simulation: potential solve, collision resolution,
//! per-UAV MPC, motion, sensing and coverage, one control step at a time.

mod config;
mod monitor;
mod output;

use std::time::Instant;

use nalgebra::Point2;

use crate::fields::{
    accumulate_coverage, init_probability, survey_accomplishment, undetected_probability,
    FieldError, HedacParams, PotentialSolver, ProbabilityInit, ScalarField,
};
use crate::geometry::Side;
use crate::guidance::{
    circle_clear_of_boundary, desired_yaw_rate, escape_circle, initial_side, resolve_collisions,
    Agent,
};
use crate::motion::{step_state, SpecError, UavSpec, UavState};
use crate::mpc::{control_step, ControlSource};
use crate::sensing::sense_footprint;
use crate::terrain::{incline_audit, Terrain, TerrainError};

pub use config::{
    degenerate_fov, load_config, parse_config, ConfigError, FleetEntry, OutputConfig,
    ProbabilityConfig, ScenarioConfig, UavTypeConfig, ValidatedScenario,
};
pub use monitor::{Violation, ViolationKind, VIOLATION_TOL};
pub use output::{
    export_plots, write_field_csv, FleetInfo, RunSummary, RunWriter, METRICS_FILE, SUMMARY_FILE,
    TRAJECTORY_FILE, VIOLATIONS_FILE,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("UAV {index} ({name}): {message}")]
    Fleet {
        index: usize,
        name: String,
        message: String,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("output error: {0}")]
    Output(String),
}

/// Ready-to-run scenario: terrain, field parameters and fleet.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub terrain: Terrain,
    pub params: HedacParams,
    pub dt: f64,
    pub steps: usize,
    pub fleet: Vec<(UavSpec, UavState)>,
    pub probability: ProbabilityInit,
}

/// Logged state of one UAV after a step.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct UavRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta: f64,
    pub rho: f64,
    pub phi: f64,
    pub omega: f64,
    pub v_s: f64,
    pub v_z: f64,
    /// Terrain elevation below the UAV.
    pub z_t: f64,
    /// Control source of the step that led here; `None` for the initial state.
    pub source: Option<ControlSource>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub uavs: Vec<UavRecord>,
    pub eta: f64,
    /// Wall-clock time of the control step, seconds.
    pub compute_seconds: f64,
}

/// Aggregate metrics of a run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Summary {
    pub steps: usize,
    pub final_eta: f64,
    pub eta_series: Vec<f64>,
    pub max_compute_seconds: f64,
    pub mean_compute_seconds: f64,
    pub escape_activations: usize,
    pub min_pairwise_clearance: Option<f64>,
    pub min_altitude_above_terrain: f64,
    pub violations: usize,
}

fn record_of(
    state: &UavState,
    spec: &UavSpec,
    terrain: &Terrain,
    source: Option<ControlSource>,
) -> UavRecord {
    let (v_s, v_z) = spec.velocities(state.rho, state.phi);
    UavRecord {
        x: state.x,
        y: state.y,
        z: state.z,
        theta: state.theta,
        rho: state.rho,
        phi: state.phi,
        omega: state.omega,
        v_s,
        v_z,
        z_t: terrain.surface_height(state.position()),
        source,
    }
}

/// Mutable run state. Create with [`Simulation::new`], advance with
/// [`Simulation::step`].
pub struct Simulation {
    scenario: Scenario,
    solver: PotentialSolver,
    m0: ScalarField,
    coverage: ScalarField,
    m: ScalarField,
    states: Vec<UavState>,
    sides: Vec<Side>,
    step: usize,
    records: Vec<StepRecord>,
    violations: Vec<Violation>,
    check_incline: bool,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        Self::with_incline_check(scenario, true)
    }

    /// As [`Simulation::new`]; `check_incline = false` skips the incline audit.
    pub fn with_incline_check(scenario: Scenario, check_incline: bool) -> Result<Self, SimError> {
        let mesh = &scenario.terrain.mesh;
        scenario
            .params
            .validate()
            .map_err(|m| ConfigError::field("hedac", m))?;
        if !(scenario.dt > 0.0) || !scenario.dt.is_finite() {
            return Err(
                ConfigError::field("dt", format!("must be positive, got {}", scenario.dt)).into(),
            );
        }
        if scenario.fleet.is_empty() {
            return Err(ConfigError::field("fleet", "must contain at least one UAV").into());
        }
        let specs: Vec<UavSpec> = scenario.fleet.iter().map(|(s, _)| s.clone()).collect();
        for s in &specs {
            s.validate()?;
        }
        if check_incline {
            let report = incline_audit(mesh, &specs)?;
            if let Some(e) = report.entries.iter().find(|e| !e.compatible) {
                return Err(ConfigError::field(
                    "fleet",
                    format!(
                        "terrain incline {:.1}° exceeds the {:.1}° supported by UAV type {}",
                        report.terrain_max.to_degrees(),
                        e.kappa.to_degrees(),
                        e.name
                    ),
                )
                .into());
            }
        }
        let mut sides = Vec::with_capacity(specs.len());
        for (i, (spec, st)) in scenario.fleet.iter().enumerate() {
            let fail = |m: String| SimError::Fleet {
                index: i,
                name: spec.name.clone(),
                message: m,
            };
            let p = st.position();
            if !mesh.contains(p) {
                return Err(fail(format!(
                    "initial position ({}, {}) is outside the domain",
                    p.x, p.y
                )));
            }
            let agl = st.z - scenario.terrain.surface_height(p);
            if agl < spec.h_min {
                return Err(fail(format!(
                    "initial altitude {agl:.2} m above terrain is below h_min = {}",
                    spec.h_min
                )));
            }
            let d = mesh.boundary_distance(p);
            if d < spec.delta {
                return Err(fail(format!(
                    "initial boundary clearance {d:.2} m is below δ = {}",
                    spec.delta
                )));
            }
            spec.velocity_components(st.rho, st.phi)?;
            for (j, (other, o)) in scenario.fleet.iter().enumerate().take(i) {
                let gap = (o.position() - p).norm();
                let margin = spec.delta.max(other.delta);
                if gap < margin {
                    return Err(fail(format!(
                        "initial distance {gap:.2} m to UAV {j} is below {margin}"
                    )));
                }
            }
            let pref = if st.omega < 0.0 {
                Side::Right
            } else {
                Side::Left
            };
            let fits = initial_side(st, spec, mesh, pref).ok_or_else(|| {
                fail("no escape circle fits inside the domain at the initial position".into())
            })?;
            // prefer a side whose circle is also clear of the circles already chosen
            let disjoint = |side: Side| {
                let c = escape_circle(st, spec, side);
                circle_clear_of_boundary(mesh, &c, spec.delta)
                    && scenario.fleet[..i].iter().zip(&sides).all(|((o, os), &s)| {
                        c.gap(&escape_circle(os, o, s)) >= spec.delta.max(o.delta)
                    })
            };
            let side = [pref, pref.opposite()]
                .into_iter()
                .find(|&s| disjoint(s))
                .unwrap_or(fits);
            sides.push(side);
        }
        let solver = PotentialSolver::new(mesh, scenario.params)?;
        let m0 = init_probability(&scenario.probability, mesh)?;
        let coverage = ScalarField::zeros(mesh.node_count());
        let states: Vec<UavState> = scenario.fleet.iter().map(|(_, s)| *s).collect();
        let initial = StepRecord {
            step: 0,
            t: states[0].t,
            uavs: scenario
                .fleet
                .iter()
                .map(|(spec, s)| record_of(s, spec, &scenario.terrain, None))
                .collect(),
            eta: 0.0,
            compute_seconds: 0.0,
        };
        let mut sim = Self {
            m: m0.clone(),
            scenario,
            solver,
            m0,
            coverage,
            states,
            sides,
            step: 0,
            records: vec![initial],
            violations: Vec::new(),
            check_incline,
        };
        let v = monitor::check_state(&sim, 0);
        sim.violations.extend(v);
        Ok(sim)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn states(&self) -> &[UavState] {
        &self.states
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn coverage(&self) -> &ScalarField {
        &self.coverage
    }

    pub fn probability(&self) -> &ScalarField {
        &self.m
    }

    pub fn initial_probability(&self) -> &ScalarField {
        &self.m0
    }

    pub fn incline_checked(&self) -> bool {
        self.check_incline
    }

    pub fn finished(&self) -> bool {
        self.step >= self.scenario.steps
    }

    pub fn eta(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.eta)
    }

    /// Potential field for the current probability.
    pub fn potential(&self) -> Result<ScalarField, SimError> {
        Ok(self.solver.solve(&self.m)?)
    }

    /// One full control step.
    pub fn step(&mut self) -> Result<&StepRecord, SimError> {
        let start = Instant::now();
        let sc = &self.scenario;
        let (terrain, dt) = (&sc.terrain, sc.dt);
        let mesh = &terrain.mesh;
        let u = self.solver.solve(&self.m)?;
        let candidates: Vec<f64> = sc
            .fleet
            .iter()
            .zip(&self.states)
            .map(|((spec, _), s)| desired_yaw_rate(s, mesh, &u, spec, dt))
            .collect();
        let agents: Vec<Agent<'_>> = sc
            .fleet
            .iter()
            .zip(&self.states)
            .zip(&self.sides)
            .map(|(((spec, _), state), &side)| Agent { state, spec, side })
            .collect();
        let resolutions = resolve_collisions(&agents, &candidates, mesh, dt);
        let decisions: Vec<_> = sc
            .fleet
            .iter()
            .zip(&self.states)
            .zip(&self.sides)
            .zip(&resolutions)
            .map(|((((spec, _), s), &side), r)| control_step(s, side, r, &u, terrain, spec, dt))
            .collect();
        let prev = self.states.clone();
        for (i, d) in decisions.iter().enumerate() {
            let spec = &sc.fleet[i].0;
            let s = UavState {
                rho: d.rho,
                phi: d.phi,
                omega: d.omega,
                ..prev[i]
            };
            self.states[i] = step_state(&s, spec, dt);
            self.sides[i] = d.side;
        }
        for (i, (spec, _)) in sc.fleet.iter().enumerate() {
            let psi = sense_footprint(&self.states[i], &spec.sensor, terrain);
            accumulate_coverage(&mut self.coverage, &psi, dt)?;
        }
        self.m = undetected_probability(&self.m0, &self.coverage);
        let eta = survey_accomplishment(mesh, &self.m);
        let compute_seconds = start.elapsed().as_secs_f64();
        self.step += 1;
        let record = StepRecord {
            step: self.step,
            t: self.states[0].t,
            uavs: sc
                .fleet
                .iter()
                .zip(&self.states)
                .zip(&decisions)
                .map(|(((spec, _), s), d)| record_of(s, spec, terrain, Some(d.source)))
                .collect(),
            eta,
            compute_seconds,
        };
        self.records.push(record);
        let mut v = monitor::check_step(self, &prev);
        v.extend(monitor::check_state(self, self.step));
        self.violations.extend(v);
        Ok(self.records.last().expect("record just pushed"))
    }

    /// Runs the remaining steps.
    pub fn run(&mut self) -> Result<(), SimError> {
        while !self.finished() {
            self.step()?;
        }
        Ok(())
    }

    /// Runs the remaining steps, handing each record to `sink`.
    pub fn run_with(
        &mut self,
        mut sink: impl FnMut(&Simulation) -> Result<(), SimError>,
    ) -> Result<(), SimError> {
        while !self.finished() {
            self.step()?;
            sink(self)?;
        }
        Ok(())
    }

    /// Advances with caller-fixed controls, skipping guidance and MPC.
    /// Sensing and coverage are updated as in [`Simulation::step`].
    pub fn step_fixed(&mut self, controls: &[(f64, f64, f64)]) -> Result<f64, SimError> {
        let sc = &self.scenario;
        let terrain = &sc.terrain;
        for (i, (spec, _)) in sc.fleet.iter().enumerate() {
            let (rho, phi, omega) = controls[i];
            let s = UavState {
                rho,
                phi,
                omega,
                ..self.states[i]
            };
            self.states[i] = step_state(&s, spec, sc.dt);
            let psi = sense_footprint(&self.states[i], &spec.sensor, terrain);
            accumulate_coverage(&mut self.coverage, &psi, sc.dt)?;
        }
        self.m = undetected_probability(&self.m0, &self.coverage);
        let eta = survey_accomplishment(&terrain.mesh, &self.m);
        self.step += 1;
        self.records.push(StepRecord {
            step: self.step,
            t: self.states[0].t,
            uavs: sc
                .fleet
                .iter()
                .zip(&self.states)
                .map(|((spec, _), s)| record_of(s, spec, terrain, None))
                .collect(),
            eta,
            compute_seconds: 0.0,
        });
        Ok(eta)
    }

    pub fn summary(&self) -> Summary {
        metrics_summary(&self.records, self.violations.len())
    }
}

/// Aggregates a record series. `records` must be non-empty.
pub fn metrics_summary(records: &[StepRecord], violations: usize) -> Summary {
    let stepped = &records[1.min(records.len())..];
    let times: Vec<f64> = stepped.iter().map(|r| r.compute_seconds).collect();
    let mean = if times.is_empty() {
        0.0
    } else {
        times.iter().sum::<f64>() / times.len() as f64
    };
    let escape_activations = stepped
        .iter()
        .zip(records)
        .map(|(r, before)| {
            r.uavs
                .iter()
                .zip(&before.uavs)
                .filter(|(u, b)| {
                    u.source == Some(ControlSource::Escape)
                        && b.source != Some(ControlSource::Escape)
                })
                .count()
        })
        .sum();
    let mut min_clear: Option<f64> = None;
    let mut min_agl = f64::INFINITY;
    for r in records {
        for (i, a) in r.uavs.iter().enumerate() {
            min_agl = min_agl.min(a.z - a.z_t);
            for b in &r.uavs[i + 1..] {
                let d = (Point2::new(a.x, a.y) - Point2::new(b.x, b.y)).norm();
                min_clear = Some(min_clear.map_or(d, |m| m.min(d)));
            }
        }
    }
    Summary {
        steps: records.len() - 1,
        final_eta: records.last().map_or(0.0, |r| r.eta),
        eta_series: records.iter().map(|r| r.eta).collect(),
        max_compute_seconds: times.iter().copied().fold(0.0, f64::max),
        mean_compute_seconds: mean,
        escape_activations,
        min_pairwise_clearance: min_clear,
        min_altitude_above_terrain: min_agl,
        violations,
    }
}
