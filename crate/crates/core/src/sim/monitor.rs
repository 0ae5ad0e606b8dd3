//! Central check of the motion, altitude and clearance invariants on every
//! realized state and applied control.

use crate::motion::{UavSpec, UavState};
use crate::mpc::v_s_floor;

use super::Simulation;

/// Relative slack on every checked bound.
pub const VIOLATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Altitude,
    ControlBounds,
    VelocityEllipse,
    VerticalSpeed,
    HorizontalAcceleration,
    VerticalAcceleration,
    TurnRate,
    Separation,
    BoundaryClearance,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Violation {
    pub step: usize,
    pub uav: usize,
    pub kind: ViolationKind,
    /// Observed value and the bound it broke.
    pub value: f64,
    pub bound: f64,
}

fn below(value: f64, bound: f64, scale: f64) -> bool {
    value < bound - VIOLATION_TOL * scale.abs().max(1.0)
}

fn above(value: f64, bound: f64, scale: f64) -> bool {
    value > bound + VIOLATION_TOL * scale.abs().max(1.0)
}

fn control_violations(
    step: usize,
    uav: usize,
    s: &UavState,
    spec: &UavSpec,
    out: &mut Vec<Violation>,
) {
    let mut push = |kind, value, bound| {
        out.push(Violation {
            step,
            uav,
            kind,
            value,
            bound,
        })
    };
    if below(s.rho, spec.rho_min(), 1.0) {
        push(ViolationKind::ControlBounds, s.rho, spec.rho_min());
    }
    if above(s.rho, 1.0, 1.0) {
        push(ViolationKind::ControlBounds, s.rho, 1.0);
    }
    if below(s.phi, spec.phi_min, 1.0) {
        push(ViolationKind::ControlBounds, s.phi, spec.phi_min);
    }
    if above(s.phi, spec.phi_max, 1.0) {
        push(ViolationKind::ControlBounds, s.phi, spec.phi_max);
    }
    let (vs, vz) = spec.velocities(s.rho, s.phi);
    let floor = v_s_floor(spec, s.phi);
    if above(vs, spec.v_s_max, spec.v_s_max) {
        push(ViolationKind::VelocityEllipse, vs, spec.v_s_max);
    }
    if below(vs, floor, spec.v_s_max) {
        push(ViolationKind::VelocityEllipse, vs, floor);
    }
    if above(vz, spec.v_z_max, spec.v_z_max) {
        push(ViolationKind::VerticalSpeed, vz, spec.v_z_max);
    }
    if below(vz, spec.v_z_min, spec.v_z_min) {
        push(ViolationKind::VerticalSpeed, vz, spec.v_z_min);
    }
    let wmax = spec.omega_max();
    if above(s.omega.abs(), wmax, wmax) {
        push(ViolationKind::TurnRate, s.omega.abs(), wmax);
    }
}

/// Pose invariants of the current states: altitude and clearances.
pub(super) fn check_state(sim: &Simulation, step: usize) -> Vec<Violation> {
    let sc = sim.scenario();
    let mesh = &sc.terrain.mesh;
    let states = sim.states();
    let mut out = Vec::new();
    for (i, ((spec, _), s)) in sc.fleet.iter().zip(states).enumerate() {
        let agl = s.z - sc.terrain.surface_height(s.position());
        if below(agl, spec.h_min, spec.h_min) {
            out.push(Violation {
                step,
                uav: i,
                kind: ViolationKind::Altitude,
                value: agl,
                bound: spec.h_min,
            });
        }
        let d = if mesh.contains(s.position()) {
            mesh.boundary_distance(s.position())
        } else {
            -mesh.boundary_distance(s.position())
        };
        if below(d, spec.delta, spec.delta) {
            out.push(Violation {
                step,
                uav: i,
                kind: ViolationKind::BoundaryClearance,
                value: d,
                bound: spec.delta,
            });
        }
        for ((other, _), o) in sc.fleet.iter().zip(states).skip(i + 1) {
            let gap = (o.position() - s.position()).norm();
            let margin = spec.delta.max(other.delta);
            if below(gap, margin, margin) {
                out.push(Violation {
                    step,
                    uav: i,
                    kind: ViolationKind::Separation,
                    value: gap,
                    bound: margin,
                });
            }
        }
    }
    out
}

/// Control invariants of the step just taken: bounds on the applied
/// controls and the acceleration between consecutive held velocities.
pub(super) fn check_step(sim: &Simulation, prev: &[UavState]) -> Vec<Violation> {
    let sc = sim.scenario();
    let step = sim.records().len() - 1;
    let mut out = Vec::new();
    for (i, ((spec, _), s)) in sc.fleet.iter().zip(sim.states()).enumerate() {
        control_violations(step, i, s, spec, &mut out);
        let (vs0, vz0) = spec.velocities(prev[i].rho, prev[i].phi);
        let (vs1, vz1) = spec.velocities(s.rho, s.phi);
        let a_s = (vs1 - vs0) / sc.dt;
        let a_z = (vz1 - vz0) / sc.dt;
        for (kind, a, lo, hi) in [
            (
                ViolationKind::HorizontalAcceleration,
                a_s,
                spec.a_s_min,
                spec.a_s_max,
            ),
            (
                ViolationKind::VerticalAcceleration,
                a_z,
                spec.a_z_min,
                spec.a_z_max,
            ),
        ] {
            if below(a, lo, lo) {
                out.push(Violation {
                    step,
                    uav: i,
                    kind,
                    value: a,
                    bound: lo,
                });
            }
            if above(a, hi, hi) {
                out.push(Violation {
                    step,
                    uav: i,
                    kind,
                    value: a,
                    bound: hi,
                });
            }
        }
    }
    out
}
