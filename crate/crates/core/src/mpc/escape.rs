//! Escape maneuver: brake as hard as allowed and climb as fast as allowed
//! while circling at the minimum turning radius.

use crate::geometry::Side;
use crate::motion::{step_state, UavSpec, UavState};
use crate::terrain::Terrain;

/// Horizontal speed below which the maneuver has come to rest.
pub const REST_SPEED: f64 = 1e-6;
/// Hard cap on simulated escape steps.
pub const MAX_ESCAPE_STEPS: usize = 10_000;
const SPEED_SCAN: usize = 64;
const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeControls {
    pub rho: f64,
    pub phi: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscapeFailure {
    /// No velocity pair respects the acceleration and velocity bands.
    NoAdmissibleControl,
    Altitude,
    Boundary,
    StepLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeResult {
    pub feasible: bool,
    /// Controls of the first maneuver step.
    pub first: Option<EscapeControls>,
    pub steps: usize,
    pub failure: Option<EscapeFailure>,
}

/// Next (ρ, φ) of the maneuver from the held velocities (v_s0, v_z0): the
/// lowest reachable horizontal speed, then the highest reachable climb rate.
pub fn escape_controls(
    v_s0: f64,
    v_z0: f64,
    phi0: f64,
    spec: &UavSpec,
    dt: f64,
) -> Option<(f64, f64)> {
    let vs_lo = (v_s0 + spec.a_s_min * dt).max(0.0);
    let vs_hi = (v_s0 + spec.a_s_max * dt).min(spec.v_s_max);
    if vs_lo > vs_hi + SLACK {
        return None;
    }
    let half_pi = std::f64::consts::FRAC_PI_2 - 1e-12;
    for k in 0..=SPEED_SCAN {
        let vs = vs_lo + (vs_hi - vs_lo).max(0.0) * k as f64 / SPEED_SCAN as f64;
        let room = (1.0 - (vs / spec.v_s_max).powi(2)).max(0.0).sqrt();
        let mut hi = (v_z0 + spec.a_z_max * dt).min(spec.v_z_max * room);
        let mut lo = (v_z0 + spec.a_z_min * dt).max(spec.v_z_min * room);
        if spec.phi_max < half_pi {
            hi = hi.min(vs * spec.phi_max.tan());
        }
        if spec.phi_min > -half_pi {
            lo = lo.max(vs * spec.phi_min.tan());
        }
        if lo > hi + SLACK {
            continue;
        }
        let vz = hi;
        let speed = vs.hypot(vz);
        if speed < spec.v_s_min * (1.0 - 1e-12) {
            continue;
        }
        if speed < 1e-12 {
            return Some((0.0, phi0.clamp(spec.phi_min, spec.phi_max)));
        }
        let phi = vz.atan2(vs).clamp(spec.phi_min, spec.phi_max);
        let rho = (speed / spec.ellipse_speed(phi)).clamp(spec.rho_min(), 1.0);
        return Some((rho, phi));
    }
    None
}

/// Simulates the maneuver from `start` on `side` until the UAV rests or has
/// flown a full circle, checking altitude, boundary clearance and the
/// motion bands at every step.
pub fn escape_feasible(
    start: &UavState,
    side: Side,
    spec: &UavSpec,
    terrain: &Terrain,
    dt: f64,
) -> EscapeResult {
    let mesh = &terrain.mesh;
    let check = |s: &UavState| -> Result<(), EscapeFailure> {
        let p = s.position();
        if !mesh.contains(p) || mesh.boundary_distance(p) < spec.delta - SLACK {
            return Err(EscapeFailure::Boundary);
        }
        if s.z - terrain.surface_height(p) < spec.h_min - SLACK {
            return Err(EscapeFailure::Altitude);
        }
        Ok(())
    };
    let fail = |first, steps, why| EscapeResult {
        feasible: false,
        first,
        steps,
        failure: Some(why),
    };
    if let Err(why) = check(start) {
        // the first controls remain usable as a best effort
        let first = escape_controls_for(start, side, spec, dt);
        return fail(first, 0, why);
    }
    let mut state = *start;
    let (mut vs, mut vz) = spec.velocities(state.rho, state.phi);
    let mut swept = 0.0;
    let mut first = None;
    for steps in 1..=MAX_ESCAPE_STEPS {
        let Some((rho, phi)) = escape_controls(vs, vz, state.phi, spec, dt) else {
            return fail(first, steps, EscapeFailure::NoAdmissibleControl);
        };
        let (nvs, nvz) = spec.velocities(rho, phi);
        let omega = side.sign() * nvs / spec.r_min;
        if first.is_none() {
            first = Some(EscapeControls { rho, phi, omega });
        }
        let accel_ok = (nvs - vs) / dt >= spec.a_s_min - SLACK
            && (nvs - vs) / dt <= spec.a_s_max + SLACK
            && (nvz - vz) / dt >= spec.a_z_min - SLACK
            && (nvz - vz) / dt <= spec.a_z_max + SLACK;
        if !accel_ok {
            return fail(first, steps, EscapeFailure::NoAdmissibleControl);
        }
        state.rho = rho;
        state.phi = phi;
        state.omega = omega;
        state = step_state(&state, spec, dt);
        if let Err(why) = check(&state) {
            return fail(first, steps, why);
        }
        vs = nvs;
        vz = nvz;
        swept += nvs * dt / spec.r_min;
        if vs <= REST_SPEED || swept >= std::f64::consts::TAU {
            return EscapeResult {
                feasible: true,
                first,
                steps,
                failure: None,
            };
        }
    }
    fail(first, MAX_ESCAPE_STEPS, EscapeFailure::StepLimit)
}

fn escape_controls_for(
    s: &UavState,
    side: Side,
    spec: &UavSpec,
    dt: f64,
) -> Option<EscapeControls> {
    let (vs, vz) = spec.velocities(s.rho, s.phi);
    escape_controls(vs, vz, s.phi, spec, dt).map(|(rho, phi)| {
        let (nvs, _) = spec.velocities(rho, phi);
        EscapeControls {
            rho,
            phi,
            omega: side.sign() * nvs / spec.r_min,
        }
    })
}
