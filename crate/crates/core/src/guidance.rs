//! Horizontal search control: gradient-following yaw rate, turn-rate
//! clamping and centralized circle-based collision avoidance.
//!
//! Each UAV owns an escape circle: the minimum-radius circle it can always
//! fall back to by turning on its escape side. Escape circles are kept clear
//! of the boundary and of each other. A turn rate is accepted when the
//! bounding circle of all clearing circles it can lead to is clear of the
//! boundary and of every circle reserved by the other UAVs.

use nalgebra::Point2;

use crate::fields::{gradient_direction, ScalarField};
use crate::geometry::{arc_advance, cross, heading_vector, left_normal, Circle, Side};
use crate::motion::{UavSpec, UavState};
use crate::terrain::TerrainMesh;

/// Grid resolution of the turn-rate search.
pub const OMEGA_GRID: usize = 41;

pub fn clamp_omega(omega: f64, spec: &UavSpec) -> f64 {
    let m = spec.omega_max();
    omega.clamp(-m, m)
}

/// Turn rate steering the heading onto the potential gradient within one
/// step, clamped to the admissible range. Zero where the gradient vanishes.
pub fn desired_yaw_rate(
    state: &UavState,
    mesh: &TerrainMesh,
    u: &ScalarField,
    spec: &UavSpec,
    dt: f64,
) -> f64 {
    match gradient_direction(mesh, u, state.position()) {
        Ok(Some(g)) => clamp_omega(yaw_toward(state.theta, g.x, g.y, dt), spec),
        _ => 0.0,
    }
}

/// Unclamped rate turning heading `theta` onto direction (gx, gy) in `dt`.
/// Antiparallel directions turn left.
pub fn yaw_toward(theta: f64, gx: f64, gy: f64, dt: f64) -> f64 {
    let h = heading_vector(theta);
    let g = nalgebra::Vector2::new(gx, gy);
    let dot = (h.dot(&g) / g.norm()).clamp(-1.0, 1.0);
    let mag = dot.acos() / dt;
    if cross(h, g) < 0.0 {
        -mag
    } else {
        mag
    }
}

/// Minimum-radius circle the UAV could turn onto at speed `v_s` after one
/// step along the path of commanded rate `omega`. The commanded rate applies
/// at full speed; slower flight keeps the same path curvature.
pub fn clearing_circle(
    state: &UavState,
    omega: f64,
    spec: &UavSpec,
    dt: f64,
    v_s: f64,
    side: Side,
) -> Circle {
    let kappa = omega / spec.v_s_max;
    let (p, theta) = arc_advance(state.position(), state.theta, kappa * v_s * dt, v_s * dt);
    Circle::new(
        p + left_normal(theta) * (side.sign() * spec.r_min),
        spec.r_min,
    )
}

/// Clearing circle at the current position.
pub fn escape_circle(state: &UavState, spec: &UavSpec, side: Side) -> Circle {
    Circle::new(
        state.position() + left_normal(state.theta) * (side.sign() * spec.r_min),
        spec.r_min,
    )
}

/// Circle containing every clearing circle for speeds in [0, v_s_max].
pub fn bounding_circle(
    state: &UavState,
    omega: f64,
    spec: &UavSpec,
    dt: f64,
    side: Side,
) -> Circle {
    let c0 = clearing_circle(state, omega, spec, dt, 0.0, side).center;
    let cm = clearing_circle(state, omega, spec, dt, 0.5 * spec.v_s_max, side).center;
    let c1 = clearing_circle(state, omega, spec, dt, spec.v_s_max, side).center;
    let spread = (c0 - cm).norm().max((c1 - cm).norm());
    Circle::new(cm, spec.r_min + spread)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvoidanceGeometry {
    pub omega: f64,
    pub left: Circle,
    pub right: Circle,
}

impl AvoidanceGeometry {
    pub fn side(&self, side: Side) -> Circle {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }
}

pub fn build_avoidance_geometry(
    state: &UavState,
    omega: f64,
    spec: &UavSpec,
    dt: f64,
) -> AvoidanceGeometry {
    AvoidanceGeometry {
        omega,
        left: bounding_circle(state, omega, spec, dt, Side::Left),
        right: bounding_circle(state, omega, spec, dt, Side::Right),
    }
}

/// One UAV as seen by the collision resolver.
#[derive(Debug, Clone, Copy)]
pub struct Agent<'a> {
    pub state: &'a UavState,
    pub spec: &'a UavSpec,
    /// Side of the currently reserved escape circle.
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    /// Final commanded turn rate at full speed.
    pub omega: f64,
    /// Escape side for the next step.
    pub side: Side,
    /// Escape turn rate, `side · ω_max`.
    pub omega_esc: f64,
    /// No clear turn rate was found; the UAV continues its escape maneuver.
    pub escape: bool,
    /// Circles reserved for this step: the current escape circle and, unless
    /// escaping, the accepted bounding circle.
    pub escape_circle: Circle,
    pub bounding: Option<Circle>,
}

impl Resolution {
    pub fn reserved(&self) -> impl Iterator<Item = Circle> + '_ {
        std::iter::once(self.escape_circle).chain(self.bounding)
    }
}

/// True when the circle lies inside the domain with clearance `delta`.
pub fn circle_clear_of_boundary(mesh: &TerrainMesh, c: &Circle, delta: f64) -> bool {
    mesh.disk_clear(c.center, c.radius, delta)
}

/// Candidate turn rates in search order: the candidate itself, then the
/// uniform grid by distance to it (ties to the smaller rate).
pub fn omega_search_order(candidate: f64, omega_max: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..OMEGA_GRID)
        .map(|k| -omega_max + 2.0 * omega_max * k as f64 / (OMEGA_GRID - 1) as f64)
        .collect();
    grid.sort_by(|a, b| {
        (a - candidate)
            .abs()
            .total_cmp(&(b - candidate).abs())
            .then(a.total_cmp(b))
    });
    let mut out = Vec::with_capacity(OMEGA_GRID + 1);
    out.push(candidate);
    out.extend(grid.into_iter().filter(|w| *w != candidate));
    out
}

/// Sequential pass in index order. Each UAV keeps its candidate if its
/// bounding circle is clear, otherwise takes the closest clear grid value.
/// A UAV with no clear value keeps turning on its escape circle.
pub fn resolve_collisions(
    agents: &[Agent<'_>],
    candidates: &[f64],
    mesh: &TerrainMesh,
    dt: f64,
) -> Vec<Resolution> {
    assert_eq!(agents.len(), candidates.len());
    let escape: Vec<Circle> = agents
        .iter()
        .map(|a| escape_circle(a.state, a.spec, a.side))
        .collect();
    let mut out: Vec<Resolution> = Vec::with_capacity(agents.len());
    for (i, a) in agents.iter().enumerate() {
        let wmax = a.spec.omega_max();
        let cand = clamp_omega(candidates[i], a.spec);
        let clear = |b: &Circle| {
            if !circle_clear_of_boundary(mesh, b, a.spec.delta) {
                return false;
            }
            agents.iter().enumerate().all(|(j, o)| {
                if j == i {
                    return true;
                }
                let margin = a.spec.delta.max(o.spec.delta);
                let ok = |c: Circle| b.gap(&c) >= margin;
                match out.get(j) {
                    Some(r) => r.reserved().all(ok),
                    None => ok(escape[j]),
                }
            })
        };
        let mut found = None;
        'search: for w in omega_search_order(cand, wmax) {
            let pref = Side::of_rate(w);
            for side in [pref, pref.opposite()] {
                let b = bounding_circle(a.state, w, a.spec, dt, side);
                if clear(&b) {
                    found = Some((w, side, b));
                    break 'search;
                }
            }
        }
        out.push(match found {
            Some((w, side, b)) => Resolution {
                omega: w,
                side,
                omega_esc: side.sign() * wmax,
                escape: false,
                escape_circle: escape[i],
                bounding: Some(b),
            },
            None => Resolution {
                omega: a.side.sign() * wmax,
                side: a.side,
                omega_esc: a.side.sign() * wmax,
                escape: true,
                escape_circle: escape[i],
                bounding: None,
            },
        });
    }
    out
}

/// Escape side whose circle at the current position is clear of the
/// boundary, preferring `pref`.
pub fn initial_side(
    state: &UavState,
    spec: &UavSpec,
    mesh: &TerrainMesh,
    pref: Side,
) -> Option<Side> {
    [pref, pref.opposite()]
        .into_iter()
        .find(|&s| circle_clear_of_boundary(mesh, &escape_circle(state, spec, s), spec.delta))
}

/// Reflection of a point across the line through `o` with direction angle `a`.
pub fn reflect_point(p: Point2<f64>, o: Point2<f64>, a: f64) -> Point2<f64> {
    let d = heading_vector(a);
    let v = p - o;
    o + d * (2.0 * v.dot(&d)) - v
}
