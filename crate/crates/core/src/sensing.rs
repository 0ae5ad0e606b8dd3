//! Pyramidal camera footprint over terrain with line-of-sight occlusion.

use nalgebra::{Point2, Point3, Vector3};

use crate::motion::UavState;
use crate::terrain::Terrain;

/// Detection rate Γ(d) = k·exp(q·(b − d)/s) at slant distance `d`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SensingFunction {
    pub k: f64,
    pub b: f64,
    pub s: f64,
    pub q: f64,
}

impl SensingFunction {
    pub const GAMMA_A: Self = Self {
        k: 1.2,
        b: -50.0,
        s: 25.0,
        q: 0.55,
    };
    pub const GAMMA_B: Self = Self {
        k: 1.4,
        b: -45.0,
        s: 35.0,
        q: 0.6,
    };
    pub const GAMMA_C: Self = Self {
        k: 1.6,
        b: -45.0,
        s: 35.0,
        q: 0.6,
    };

    pub fn eval(&self, d: f64) -> f64 {
        self.k * (self.q * (self.b - d) / self.s).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SensorSpec {
    /// Lateral (across-track) opening angle, radians.
    pub gamma1: f64,
    /// Longitudinal (along-track) opening angle, radians.
    pub gamma2: f64,
    pub function: SensingFunction,
}

impl SensorSpec {
    pub fn validate(&self) -> Result<(), String> {
        let pi = std::f64::consts::PI;
        if !(self.gamma1 > 0.0 && self.gamma1 < pi && self.gamma2 > 0.0 && self.gamma2 < pi) {
            return Err("FOV angles must lie in (0°, 180°)".into());
        }
        let f = self.function;
        if !(f.k >= 0.0 && f.s > 0.0 && f.q >= 0.0) || !f.b.is_finite() {
            return Err(
                "sensing function must be nonnegative and non-increasing (k ≥ 0, s > 0, q ≥ 0)"
                    .into(),
            );
        }
        Ok(())
    }

    /// Half-widths of the ground footprint at height `h` (lateral, longitudinal).
    pub fn footprint_half_extents(&self, h: f64) -> (f64, f64) {
        (h * (0.5 * self.gamma1).tan(), h * (0.5 * self.gamma2).tan())
    }
}

/// Offset of the UAV from the terrain point, in heading-aligned axes:
/// `x` along track, `y` across track, `z` up.
pub fn local_coords(x: Point3<f64>, theta: f64, p: Point2<f64>, z_t: f64) -> Vector3<f64> {
    let d = x - Point3::new(p.x, p.y, z_t);
    let (s, c) = theta.sin_cos();
    Vector3::new(c * d.x + s * d.y, -s * d.x + c * d.y, d.z)
}

pub fn in_fov(r: &Vector3<f64>, sensor: &SensorSpec) -> bool {
    if !(r.z > 0.0) {
        return false;
    }
    let tol = 1e-12 * r.z;
    r.y.abs() <= r.z * (0.5 * sensor.gamma1).tan() + tol
        && r.x.abs() <= r.z * (0.5 * sensor.gamma2).tan() + tol
}

/// True when every interior probe of the segment lies strictly above the
/// terrain. Probes without terrain data do not occlude.
pub fn line_of_sight(x: Point3<f64>, target: Point3<f64>, terrain: &Terrain) -> bool {
    let horizontal = ((target.x - x.x).powi(2) + (target.y - x.y).powi(2)).sqrt();
    let step = terrain.probe_step();
    let mut k = 1.0;
    while k * step < horizontal {
        let t = k * step / horizontal;
        let p = x + (target - x) * t;
        if let Some(zt) = terrain.probe_height(Point2::new(p.x, p.y)) {
            if zt >= p.z {
                return false;
            }
        }
        k += 1.0;
    }
    true
}

pub fn detection_rate(r: &Vector3<f64>, sensor: &SensorSpec, visible: bool) -> f64 {
    if visible && in_fov(r, sensor) {
        sensor.function.eval(r.norm())
    } else {
        0.0
    }
}

/// Nonzero detection rates at mesh nodes seen by the UAV, in ascending node order.
pub fn sense_footprint(
    state: &UavState,
    sensor: &SensorSpec,
    terrain: &Terrain,
) -> Vec<(usize, f64)> {
    let mesh = &terrain.mesh;
    let h = state.z - mesh.elevation_range().0;
    if !(h > 0.0) {
        return Vec::new();
    }
    let (lat, lon) = sensor.footprint_half_extents(h);
    let (s, c) = state.theta.sin_cos();
    let ex = c.abs() * lon + s.abs() * lat;
    let ey = s.abs() * lon + c.abs() * lat;
    let pos = state.position();
    let min = Point2::new(pos.x - ex, pos.y - ey);
    let max = Point2::new(pos.x + ex, pos.y + ey);
    let x = state.position3();
    let mut out = Vec::new();
    mesh.for_each_node_in_box(min, max, |i| {
        let p = mesh.point(i);
        let zt = mesh.elevations()[i];
        let r = local_coords(x, state.theta, p, zt);
        if in_fov(&r, sensor) && line_of_sight(x, Point3::new(p.x, p.y, zt), terrain) {
            let rate = sensor.function.eval(r.norm());
            if rate > 0.0 {
                out.push((i, rate));
            }
        }
    });
    out.sort_unstable_by_key(|e| e.0);
    out.dedup_by_key(|e| e.0);
    out
}
