use nalgebra::Point2;

use crate::fields::{gradient_direction, ScalarField};
use crate::geometry::{arc_advance, Side};
use crate::guidance::{
    bounding_circle, circle_clear_of_boundary, clamp_omega, omega_search_order, yaw_toward,
};
use crate::motion::{UavSpec, UavState};
use crate::terrain::TerrainMesh;

/// Full-speed horizontal path over the prediction horizon. Segment `k`
/// joins samples `k` and `k + 1` with constant turn rate `omega[k]`.
#[derive(Debug, Clone)]
pub struct PredictedPath {
    pub dt: f64,
    pub v_max: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
}

impl PredictedPath {
    pub fn n_pts(&self) -> usize {
        self.omega.len()
    }

    pub fn segment_length(&self) -> f64 {
        self.v_max * self.dt
    }

    pub fn tau_max(&self) -> f64 {
        self.n_pts() as f64 * self.dt
    }

    pub fn length(&self) -> f64 {
        self.n_pts() as f64 * self.segment_length()
    }

    /// Arc length reached at time `tau` along the full-speed path.
    pub fn s_at(&self, tau: f64) -> f64 {
        self.v_max * tau
    }

    fn segment_of(&self, s: f64) -> usize {
        let l = self.segment_length();
        if l <= 0.0 {
            return 0;
        }
        ((s / l).floor().max(0.0) as usize).min(self.n_pts() - 1)
    }

    /// Point and heading at arc length `s`, exact along each arc.
    pub fn pose_at(&self, s: f64) -> (Point2<f64>, f64) {
        let s = s.clamp(0.0, self.length());
        let k = self.segment_of(s);
        let local = s - k as f64 * self.segment_length();
        arc_advance(
            Point2::new(self.x[k], self.y[k]),
            self.theta[k],
            self.omega[k] * local / self.v_max,
            local,
        )
    }

    /// Turn rate governing the path just before arc length `s`.
    pub fn omega_at(&self, s: f64) -> f64 {
        let l = self.segment_length();
        let k = if l <= 0.0 { 0.0 } else { (s / l).ceil() - 1.0 };
        self.omega[(k.max(0.0) as usize).min(self.n_pts() - 1)]
    }
}

/// Simulates `n_pts` full-speed steps. The first segment uses the resolved
/// turn rate `omega_first`; later ones follow the frozen potential gradient,
/// steered so some bounding circle stays clear of the boundary.
pub fn build_predicted_path(
    state: &UavState,
    mesh: &TerrainMesh,
    u: &ScalarField,
    spec: &UavSpec,
    dt: f64,
    omega_first: f64,
) -> PredictedPath {
    let n = spec.n_pts;
    let l = spec.v_s_max * dt;
    let mut path = PredictedPath {
        dt,
        v_max: spec.v_s_max,
        x: Vec::with_capacity(n + 1),
        y: Vec::with_capacity(n + 1),
        theta: Vec::with_capacity(n + 1),
        omega: Vec::with_capacity(n),
    };
    let mut p = state.position();
    let mut theta = state.theta;
    for k in 0..n {
        path.x.push(p.x);
        path.y.push(p.y);
        path.theta.push(theta);
        let w = if k == 0 {
            omega_first
        } else {
            let desired = match gradient_direction(mesh, u, p) {
                Ok(Some(g)) => clamp_omega(yaw_toward(theta, g.x, g.y, dt), spec),
                _ => 0.0,
            };
            steer_clear(p, theta, desired, mesh, spec, dt)
        };
        path.omega.push(w);
        let (np, nt) = arc_advance(p, theta, w * dt, l);
        p = np;
        theta = nt;
    }
    path.x.push(p.x);
    path.y.push(p.y);
    path.theta.push(theta);
    path
}

fn steer_clear(
    p: Point2<f64>,
    theta: f64,
    desired: f64,
    mesh: &TerrainMesh,
    spec: &UavSpec,
    dt: f64,
) -> f64 {
    let probe = UavState {
        x: p.x,
        y: p.y,
        z: 0.0,
        theta,
        rho: 1.0,
        phi: 0.0,
        omega: 0.0,
        t: 0.0,
    };
    for w in omega_search_order(desired, spec.omega_max()) {
        let pref = Side::of_rate(w);
        for side in [pref, pref.opposite()] {
            if circle_clear_of_boundary(
                mesh,
                &bounding_circle(&probe, w, spec, dt, side),
                spec.delta,
            ) {
                return w;
            }
        }
    }
    desired
}
