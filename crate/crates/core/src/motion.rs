//! Kinematic UAV model: velocity ellipse, velocity decomposition and
//! constant-turn-rate state integration.

use nalgebra::{Point2, Point3};

use crate::geometry::arc_advance;
use crate::sensing::SensorSpec;

/// Slack on control bounds when validating user-supplied values.
pub const BOUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, thiserror::Error)]
#[error("UAV type `{name}`: {message}")]
pub struct SpecError {
    pub name: String,
    pub message: String,
}

impl SpecError {
    pub fn new(name: &str, message: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UavKind {
    MultiRotor,
    FixedWing,
}

/// Motion, sensing and control limits of one aircraft type.
#[derive(Debug, Clone, PartialEq)]
pub struct UavSpec {
    pub name: String,
    pub kind: UavKind,
    pub v_s_max: f64,
    pub v_s_min: f64,
    pub v_z_max: f64,
    pub v_z_min: f64,
    pub a_s_max: f64,
    pub a_s_min: f64,
    pub a_z_max: f64,
    pub a_z_min: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub omega_lim: f64,
    pub r_min: f64,
    pub delta: f64,
    pub h_min: f64,
    pub h_goal: f64,
    pub sensor: SensorSpec,
    pub n_pts: usize,
}

impl UavSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        let fail = |m: String| Err(SpecError::new(&self.name, m));
        let finite = [
            self.v_s_max,
            self.v_s_min,
            self.v_z_max,
            self.v_z_min,
            self.a_s_max,
            self.a_s_min,
            self.a_z_max,
            self.a_z_min,
            self.phi_min,
            self.phi_max,
            self.omega_lim,
            self.r_min,
            self.delta,
            self.h_min,
            self.h_goal,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return fail("all limits must be finite".into());
        }
        if self.v_s_min < 0.0 || self.v_s_min >= self.v_s_max {
            return fail(format!(
                "requires 0 ≤ v_s_min < v_s_max, got {} and {}",
                self.v_s_min, self.v_s_max
            ));
        }
        if !(self.v_z_max > 0.0) || !(self.v_z_min < 0.0) {
            return fail("requires v_z_max > 0 > v_z_min".into());
        }
        if self.a_s_max < 0.0 || self.a_s_min > 0.0 || self.a_z_max < 0.0 || self.a_z_min > 0.0 {
            return fail("acceleration bands must contain zero".into());
        }
        if !(self.phi_min < 0.0 && 0.0 < self.phi_max) {
            return fail("requires φ_min < 0 < φ_max".into());
        }
        match self.kind {
            UavKind::MultiRotor => {
                let half_pi = std::f64::consts::FRAC_PI_2;
                if (self.phi_min + half_pi).abs() > 1e-9 || (self.phi_max - half_pi).abs() > 1e-9 {
                    return fail("multi-rotor φ limits must be ±90°".into());
                }
                if self.v_s_min != 0.0 {
                    return fail("multi-rotor v_s_min must be 0".into());
                }
            }
            UavKind::FixedWing => {
                if self.phi_min < -0.25 || self.phi_max > 0.25 {
                    return fail("fixed-wing |φ| limits must not exceed 0.25 rad".into());
                }
                if !(self.v_s_min > 0.0) {
                    return fail("fixed-wing v_s_min must be positive".into());
                }
            }
        }
        if !(self.omega_lim > 0.0) || !(self.r_min > 0.0) {
            return fail("ω_lim and R_min must be positive".into());
        }
        if !(self.delta > 0.0) {
            return fail(format!("δ must be positive, got {}", self.delta));
        }
        if !(self.h_min > 0.0) || self.h_min >= self.h_goal {
            return fail(format!(
                "requires 0 < h_min < h_goal, got h_min = {} and h_goal = {}",
                self.h_min, self.h_goal
            ));
        }
        if self.n_pts < 2 {
            return fail("n_pts must be at least 2".into());
        }
        self.sensor
            .validate()
            .map_err(|m| SpecError::new(&self.name, m))
    }

    pub fn rho_min(&self) -> f64 {
        self.v_s_min / self.v_s_max
    }

    /// Largest admissible yaw rate, min(ω_lim, v_s_max / R_min).
    pub fn omega_max(&self) -> f64 {
        self.omega_lim.min(self.v_s_max / self.r_min)
    }

    /// Prediction horizon for control step `dt`.
    pub fn tau_max(&self, dt: f64) -> f64 {
        self.n_pts as f64 * dt
    }

    /// Velocity-ellipse radius for any incline, without bound checks.
    pub fn ellipse_speed(&self, phi: f64) -> f64 {
        let vc = if phi >= 0.0 {
            self.v_z_max
        } else {
            -self.v_z_min
        };
        let (s, c) = phi.sin_cos();
        self.v_s_max * vc / ((vc * c).powi(2) + (self.v_s_max * s).powi(2)).sqrt()
    }

    /// (v_s, v_z) for any control pair, without bound checks.
    pub fn velocities(&self, rho: f64, phi: f64) -> (f64, f64) {
        let v = rho * self.ellipse_speed(phi);
        let (s, c) = phi.sin_cos();
        (v * c, v * s)
    }

    pub fn limit_velocity(&self, phi: f64) -> Result<f64, SpecError> {
        self.check_phi(phi)?;
        Ok(self.ellipse_speed(phi))
    }

    pub fn velocity_components(&self, rho: f64, phi: f64) -> Result<(f64, f64), SpecError> {
        self.check_phi(phi)?;
        if rho < self.rho_min() - BOUND_TOL || rho > 1.0 + BOUND_TOL {
            return Err(SpecError::new(
                &self.name,
                format!("ρ = {rho} outside [{}, 1]", self.rho_min()),
            ));
        }
        Ok(self.velocities(rho, phi))
    }

    fn check_phi(&self, phi: f64) -> Result<(), SpecError> {
        if phi < self.phi_min - BOUND_TOL || phi > self.phi_max + BOUND_TOL {
            return Err(SpecError::new(
                &self.name,
                format!("φ = {phi} outside [{}, {}]", self.phi_min, self.phi_max),
            ));
        }
        Ok(())
    }
}

/// Pose and held controls of one UAV.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UavState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta: f64,
    pub rho: f64,
    pub phi: f64,
    pub omega: f64,
    pub t: f64,
}

impl UavState {
    pub fn position(&self) -> Point2<f64> {
        Point2::new(self.x, self.y)
    }

    pub fn position3(&self) -> Point3<f64> {
        Point3::new(self.x, self.y, self.z)
    }
}

/// Advances `state` by `dt` holding ρ, φ and ω constant. The horizontal
/// path is the exact arc of the constant turn rate.
pub fn step_state(state: &UavState, spec: &UavSpec, dt: f64) -> UavState {
    let (vs, vz) = spec.velocities(state.rho, state.phi);
    let (p, theta) = arc_advance(state.position(), state.theta, state.omega * dt, vs * dt);
    UavState {
        x: p.x,
        y: p.y,
        z: state.z + vz * dt,
        theta,
        t: state.t + dt,
        ..*state
    }
}

/// Aircraft types used in the reference scenarios.
pub mod presets {
    use super::{UavKind, UavSpec};
    use crate::sensing::{SensingFunction, SensorSpec};

    /// Default ω_lim when a configuration omits it.
    pub fn default_omega_lim(kind: UavKind) -> f64 {
        match kind {
            UavKind::MultiRotor => 1.0,
            UavKind::FixedWing => 0.3,
        }
    }

    fn multirotor(name: &str, h_goal: f64, fov: (f64, f64), gamma: SensingFunction) -> UavSpec {
        UavSpec {
            name: name.to_string(),
            kind: UavKind::MultiRotor,
            v_s_max: 10.0,
            v_s_min: 0.0,
            v_z_max: 5.0,
            v_z_min: -3.0,
            a_s_max: 2.0,
            a_s_min: -3.6,
            a_z_max: 2.8,
            a_z_min: -2.0,
            phi_min: -std::f64::consts::FRAC_PI_2,
            phi_max: std::f64::consts::FRAC_PI_2,
            omega_lim: default_omega_lim(UavKind::MultiRotor),
            r_min: 25.0,
            delta: 7.0,
            h_min: 30.0,
            h_goal,
            sensor: SensorSpec {
                gamma1: fov.0.to_radians(),
                gamma2: fov.1.to_radians(),
                function: gamma,
            },
            n_pts: 20,
        }
    }

    pub fn uav_a() -> UavSpec {
        multirotor("A", 50.0, (62.8, 37.9), SensingFunction::GAMMA_A)
    }

    pub fn uav_b() -> UavSpec {
        multirotor("B", 100.0, (44.2, 21.3), SensingFunction::GAMMA_B)
    }

    pub fn uav_c() -> UavSpec {
        UavSpec {
            name: "C".to_string(),
            kind: UavKind::FixedWing,
            v_s_max: 15.0,
            v_s_min: 5.0,
            v_z_max: 1.2,
            v_z_min: -1.2,
            a_s_max: 2.0,
            a_s_min: -2.0,
            a_z_max: 1.0,
            a_z_min: -1.0,
            phi_min: -13.5f64.to_radians(),
            phi_max: 13.5f64.to_radians(),
            omega_lim: default_omega_lim(UavKind::FixedWing),
            r_min: 100.0,
            delta: 60.0,
            h_min: 100.0,
            h_goal: 150.0,
            sensor: SensorSpec {
                gamma1: 90f64.to_radians(),
                gamma2: 54.3f64.to_radians(),
                function: SensingFunction::GAMMA_C,
            },
            n_pts: 30,
        }
    }
}
