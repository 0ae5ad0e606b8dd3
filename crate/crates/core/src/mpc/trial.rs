use super::path::PredictedPath;
use crate::motion::UavSpec;
use crate::terrain::Terrain;

/// Feasibility threshold on each normalized violation measure.
pub const CONSTRAINT_EPS: f64 = 1e-9;

/// Optimization vector (ρ̃(τ₁), ρ̃(τ₂), φ̃(τ₁), φ̃(τ₂)) with τ₁ = τ_max/2, τ₂ = τ_max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeVector(pub [f64; 4]);

/// Values at τ = 0 the trial regime is anchored to, taken from the current state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchors {
    pub rho: f64,
    pub phi: f64,
    pub z: f64,
}

/// Quadratic through (0, v0), (½, v1), (1, v2) evaluated at `s ∈ [0, 1]`.
pub fn quadratic(v0: f64, v1: f64, v2: f64, s: f64) -> f64 {
    let l0 = (2.0 * s - 1.0) * (s - 1.0);
    let l1 = 4.0 * s * (1.0 - s);
    let l2 = s * (2.0 * s - 1.0);
    l0 * v0 + l1 * v1 + l2 * v2
}

/// Samples ρ̃ and φ̃ on the `n + 1` point grid over the horizon. Not clipped.
pub fn trial_regime(w: &RegimeVector, anchors: &Anchors, n: usize) -> (Vec<f64>, Vec<f64>) {
    let [r1, r2, p1, p2] = w.0;
    let s = |j: usize| j as f64 / n as f64;
    (
        (0..=n)
            .map(|j| quadratic(anchors.rho, r1, r2, s(j)))
            .collect(),
        (0..=n)
            .map(|j| quadratic(anchors.phi, p1, p2, s(j)))
            .collect(),
    )
}

/// Saturates the sampled regime to the control box. The anchor sample is
/// the held control and is left untouched.
pub fn saturate_regime(rho: &mut [f64], phi: &mut [f64], spec: &UavSpec) {
    for r in rho.iter_mut().skip(1) {
        *r = r.clamp(spec.rho_min(), 1.0);
    }
    for p in phi.iter_mut().skip(1) {
        *p = p.clamp(spec.phi_min, spec.phi_max);
    }
}

/// Trial trajectory sampled at τ_j = j·Δt, j = 0..=n.
///
/// Velocities are held over each step, so sample `j` is reached from sample
/// `j − 1` with the velocities of sample `j`, exactly as the simulator
/// applies controls. Accelerations are forward differences; the last one
/// repeats the previous.
#[derive(Debug, Clone, Default)]
pub struct TrialTrajectory {
    pub dt: f64,
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub omega: Vec<f64>,
    pub v_s: Vec<f64>,
    pub v_z: Vec<f64>,
    pub a_s: Vec<f64>,
    pub a_z: Vec<f64>,
    pub z_t: Vec<f64>,
    /// Arc length ran past the end of the predicted path.
    pub clamped: bool,
}

impl TrialTrajectory {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn tau_max(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }
}

pub fn build_trial(
    path: &PredictedPath,
    rho: Vec<f64>,
    phi: Vec<f64>,
    anchors: &Anchors,
    spec: &UavSpec,
    terrain: &Terrain,
) -> TrialTrajectory {
    let n = rho.len() - 1;
    let dt = path.dt;
    let len = path.length();
    let mut t = TrialTrajectory {
        dt,
        s: Vec::with_capacity(n + 1),
        x: Vec::with_capacity(n + 1),
        y: Vec::with_capacity(n + 1),
        z: Vec::with_capacity(n + 1),
        omega: Vec::with_capacity(n + 1),
        v_s: Vec::with_capacity(n + 1),
        v_z: Vec::with_capacity(n + 1),
        z_t: Vec::with_capacity(n + 1),
        ..Default::default()
    };
    let mut s = 0.0;
    let mut z = anchors.z;
    for j in 0..=n {
        let (vs, vz) = spec.velocities(rho[j], phi[j]);
        if j > 0 {
            s += dt * vs.max(0.0);
            z += dt * vz;
        }
        if s > len {
            s = len;
            t.clamped = true;
        }
        let (p, _) = path.pose_at(s);
        t.s.push(s);
        t.x.push(p.x);
        t.y.push(p.y);
        t.z.push(z);
        t.v_s.push(vs);
        t.v_z.push(vz);
        t.omega.push(vs / path.v_max * path.omega_at(s));
        t.z_t.push(terrain.surface_height(p));
    }
    t.a_s = forward_diff(&t.v_s, dt);
    t.a_z = forward_diff(&t.v_z, dt);
    t.rho = rho;
    t.phi = phi;
    t
}

fn forward_diff(v: &[f64], dt: f64) -> Vec<f64> {
    let n = v.len();
    let mut a: Vec<f64> = (0..n - 1).map(|j| (v[j + 1] - v[j]) / dt).collect();
    a.push(*a.last().unwrap_or(&0.0));
    a
}

/// Trapezoidal mean of `f` over the uniform sample grid.
pub fn trapz_mean(f: impl Iterator<Item = f64>, n_samples: usize) -> f64 {
    let n = n_samples - 1;
    let mut sum = 0.0;
    for (j, v) in f.enumerate() {
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        sum += w * v;
    }
    sum / n as f64
}

/// Velocity term (mean shortfall of ρ̃ from 1) and altitude term (mean
/// relative deviation from h_goal).
pub fn objective_terms(trial: &TrialTrajectory, spec: &UavSpec) -> (f64, f64) {
    let n = trial.len();
    let o_v = 1.0 - trapz_mean(trial.rho.iter().copied(), n);
    let o_h = trapz_mean(
        (0..n).map(|j| ((trial.z[j] - trial.z_t[j] - spec.h_goal) / spec.h_goal).abs()),
        n,
    );
    (o_v, o_h)
}

pub fn objective(trial: &TrialTrajectory, spec: &UavSpec) -> f64 {
    let (o_v, o_h) = objective_terms(trial, spec);
    o_v + o_h
}

/// Normalized mean violations, in order: altitude, v_s min, v_s max,
/// v_z min, v_z max, a_s min, a_s max, a_z min, a_z max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintMeasures(pub [f64; 9]);

pub const CONSTRAINT_NAMES: [&str; 9] = [
    "h", "vs_min", "vs_max", "vz_min", "vz_max", "as_min", "as_max", "az_min", "az_max",
];

impl ConstraintMeasures {
    pub fn feasible(&self) -> bool {
        self.0.iter().all(|c| *c <= CONSTRAINT_EPS)
    }

    pub fn altitude(&self) -> f64 {
        self.0[0]
    }
}

/// Lower horizontal speed bound at incline φ: total speed at least v_s_min.
pub fn v_s_floor(spec: &UavSpec, phi: f64) -> f64 {
    spec.v_s_min * phi.cos()
}

pub fn constraints(trial: &TrialTrajectory, spec: &UavSpec) -> ConstraintMeasures {
    let n = trial.len();
    let pos = |v: f64| v.max(0.0);
    let vs_norm = if spec.v_s_min > 0.0 {
        spec.v_s_min
    } else {
        spec.v_s_max
    };
    let m = |f: &dyn Fn(usize) -> f64| trapz_mean((0..n).map(f), n);
    ConstraintMeasures([
        m(&|j| pos(spec.h_min - (trial.z[j] - trial.z_t[j])) / spec.h_min),
        m(&|j| pos(v_s_floor(spec, trial.phi[j]) - trial.v_s[j]) / vs_norm),
        m(&|j| pos(trial.v_s[j] - spec.v_s_max) / spec.v_s_max),
        m(&|j| pos(spec.v_z_min - trial.v_z[j]) / spec.v_z_min.abs()),
        m(&|j| pos(trial.v_z[j] - spec.v_z_max) / spec.v_z_max),
        m(&|j| pos(spec.a_s_min - trial.a_s[j]) / spec.a_s_min.abs()),
        m(&|j| pos(trial.a_s[j] - spec.a_s_max) / spec.a_s_max),
        m(&|j| pos(spec.a_z_min - trial.a_z[j]) / spec.a_z_min.abs()),
        m(&|j| pos(trial.a_z[j] - spec.a_z_max) / spec.a_z_max),
    ])
}

/// Every sampled control inside its box.
pub fn controls_in_bounds(trial: &TrialTrajectory, spec: &UavSpec) -> bool {
    let tol = 1e-12;
    trial
        .rho
        .iter()
        .all(|r| *r >= spec.rho_min() - tol && *r <= 1.0 + tol)
        && trial
            .phi
            .iter()
            .all(|p| *p >= spec.phi_min - tol && *p <= spec.phi_max + tol)
}

pub fn trial_feasible(trial: &TrialTrajectory, spec: &UavSpec) -> bool {
    controls_in_bounds(trial, spec) && constraints(trial, spec).feasible()
}
