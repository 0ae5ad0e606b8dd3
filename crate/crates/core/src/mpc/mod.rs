//! Model-predictive velocity and altitude control along the predicted
//! horizontal path, with escape-maneuver validation.

mod escape;
mod msgs;
mod path;
mod trial;

pub use escape::{
    escape_controls, escape_feasible, EscapeControls, EscapeFailure, EscapeResult,
    MAX_ESCAPE_STEPS, REST_SPEED,
};
pub use msgs::{msgs_minimize, MsgsResult, MsgsSettings, StopReason};
pub use path::{build_predicted_path, PredictedPath};
pub use trial::{
    build_trial, constraints, controls_in_bounds, objective, objective_terms, quadratic,
    saturate_regime, trapz_mean, trial_feasible, trial_regime, v_s_floor, Anchors,
    ConstraintMeasures, RegimeVector, TrialTrajectory, CONSTRAINT_EPS, CONSTRAINT_NAMES,
};

use crate::fields::ScalarField;
use crate::geometry::Side;
use crate::guidance::Resolution;
use crate::motion::{step_state, UavSpec, UavState};
use crate::terrain::Terrain;

/// Initial vectors in normalized box coordinates, tried in order.
pub const SEEDS: [[f64; 4]; 3] = [
    [1.0, 1.0, 0.0, 0.0],
    [1.0, 1.0, 1.0, 1.0],
    [0.5, 0.5, 1.0, 1.0],
];

/// Maps a normalized seed onto the box: ρ entries onto [ρ_min, 1], φ entries onto [0, φ_max].
pub fn seed_vector(seed: &[f64; 4], spec: &UavSpec) -> RegimeVector {
    let r = |v: f64| spec.rho_min() + v * (1.0 - spec.rho_min());
    RegimeVector([
        r(seed[0]),
        r(seed[1]),
        seed[2] * spec.phi_max,
        seed[3] * spec.phi_max,
    ])
}

/// Constant regime holding the current controls, clamped to the box.
/// Tried after [`SEEDS`]; its index in [`OptimizedRegime::seed`] is `SEEDS.len()`.
pub fn hold_vector(state: &UavState, spec: &UavSpec) -> RegimeVector {
    let rho = state.rho.clamp(spec.rho_min(), 1.0);
    let phi = state.phi.clamp(spec.phi_min, spec.phi_max);
    RegimeVector([rho, rho, phi, phi])
}

pub fn regime_bounds(spec: &UavSpec) -> ([f64; 4], [f64; 4]) {
    (
        [spec.rho_min(), spec.rho_min(), spec.phi_min, spec.phi_min],
        [1.0, 1.0, spec.phi_max, spec.phi_max],
    )
}

/// True when the held controls give no motion.
pub fn at_rest(state: &UavState, spec: &UavSpec) -> bool {
    state.rho * spec.ellipse_speed(state.phi) <= REST_SPEED
}

/// Start values of the trial regime. At rest the incline has no effect on
/// the velocities, so the regime starts level.
pub fn anchors_of(state: &UavState, spec: &UavSpec) -> Anchors {
    Anchors {
        rho: state.rho,
        phi: if at_rest(state, spec) { 0.0 } else { state.phi },
        z: state.z,
    }
}

pub fn trial_for(
    w: &RegimeVector,
    state: &UavState,
    path: &PredictedPath,
    spec: &UavSpec,
    terrain: &Terrain,
) -> TrialTrajectory {
    let anchors = anchors_of(state, spec);
    let (mut rho, mut phi) = trial_regime(w, &anchors, path.n_pts());
    saturate_regime(&mut rho, &mut phi, spec);
    build_trial(path, rho, phi, &anchors, spec, terrain)
}

#[derive(Debug, Clone)]
pub struct OptimizedRegime {
    pub w: RegimeVector,
    pub trial: TrialTrajectory,
    pub objective: f64,
    /// Index into [`SEEDS`] of the seed that started the search, or
    /// `SEEDS.len()` for the hold regime.
    pub seed: usize,
    pub search: MsgsResult,
}

/// Seeds the pattern search with the first feasible initial vector, trying
/// [`SEEDS`] in order and then the hold regime; `None` when all of them are
/// infeasible.
pub fn optimize_regime(
    state: &UavState,
    path: &PredictedPath,
    terrain: &Terrain,
    spec: &UavSpec,
) -> Option<OptimizedRegime> {
    let eval = |w: &RegimeVector| {
        let t = trial_for(w, state, path, spec, terrain);
        trial_feasible(&t, spec).then(|| objective(&t, spec))
    };
    let (seed, w0, f0) = SEEDS
        .iter()
        .map(|s| seed_vector(s, spec))
        .chain(std::iter::once(hold_vector(state, spec)))
        .enumerate()
        .find_map(|(k, w)| eval(&w).map(|f| (k, w, f)))?;
    let (lo, hi) = regime_bounds(spec);
    let search = msgs_minimize(
        |x| eval(&RegimeVector(*x)),
        w0.0,
        f0,
        lo,
        hi,
        &MsgsSettings::default(),
    );
    let w = RegimeVector(search.x);
    let trial = trial_for(&w, state, path, spec, terrain);
    Some(OptimizedRegime {
        w,
        objective: search.f,
        trial,
        seed,
        search,
    })
}

/// Controls of the first step: the trial sampled at τ = Δt.
pub fn extract_controls(trial: &TrialTrajectory) -> (f64, f64, f64) {
    (trial.rho[1], trial.phi[1], trial.omega[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlSource {
    Optimal,
    Escape,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlDecision {
    pub rho: f64,
    pub phi: f64,
    pub omega: f64,
    /// Escape side carried into the next step.
    pub side: Side,
    pub source: ControlSource,
    pub objective: Option<f64>,
    /// The escape maneuver applied from the current state failed its own
    /// validation; its controls were applied anyway.
    pub unvalidated_escape: bool,
}

/// Applies the optimal controls when an escape maneuver on `new_side` is
/// feasible from the state they lead to; otherwise applies the first step
/// of the escape maneuver from the current state on `old_side`.
pub fn apply_or_escape(
    state: &UavState,
    optimal: Option<(f64, f64, f64, f64)>,
    new_side: Side,
    old_side: Side,
    spec: &UavSpec,
    terrain: &Terrain,
    dt: f64,
) -> ControlDecision {
    if let Some((rho, phi, omega, obj)) = optimal {
        let next = step_state(
            &UavState {
                rho,
                phi,
                omega,
                ..*state
            },
            spec,
            dt,
        );
        if escape_feasible(&next, new_side, spec, terrain, dt).feasible {
            return ControlDecision {
                rho,
                phi,
                omega,
                side: new_side,
                source: ControlSource::Optimal,
                objective: Some(obj),
                unvalidated_escape: false,
            };
        }
    }
    let esc = escape_feasible(state, old_side, spec, terrain, dt);
    let c = esc.first.unwrap_or_else(|| {
        // keep the held controls; only reachable on malformed limits
        EscapeControls {
            rho: state.rho,
            phi: state.phi,
            omega: old_side.sign() * spec.velocities(state.rho, state.phi).0 / spec.r_min,
        }
    });
    ControlDecision {
        rho: c.rho,
        phi: c.phi,
        omega: c.omega,
        side: old_side,
        source: ControlSource::Escape,
        objective: None,
        unvalidated_escape: !esc.feasible,
    }
}

/// Full per-UAV control decision for one step given the collision
/// resolution and the frozen potential. A plan that keeps a resting UAV at
/// rest counts as infeasible, so the escape maneuver lifts it instead.
pub fn control_step(
    state: &UavState,
    side: Side,
    resolution: &Resolution,
    u: &ScalarField,
    terrain: &Terrain,
    spec: &UavSpec,
    dt: f64,
) -> ControlDecision {
    let optimal = if resolution.escape {
        None
    } else {
        let path = build_predicted_path(state, &terrain.mesh, u, spec, dt, resolution.omega);
        optimize_regime(state, &path, terrain, spec)
            .map(|o| {
                let (rho, phi, omega) = extract_controls(&o.trial);
                (rho, phi, omega, o.objective)
            })
            .filter(|&(rho, phi, _, _)| {
                !(at_rest(state, spec)
                    && spec
                        .velocities(rho, phi)
                        .0
                        .hypot(spec.velocities(rho, phi).1)
                        <= REST_SPEED)
            })
    };
    apply_or_escape(state, optimal, resolution.side, side, spec, terrain, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ScalarField;
    use crate::motion::presets::{uav_a, uav_c};
    use crate::synthetic::grid_mesh;
    use crate::terrain::Terrain;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn flat(size: f64) -> Terrain {
        Terrain::new(
            grid_mesh(
                (-size, -size),
                (2.0 * size, 2.0 * size),
                (20, 20),
                |_, _| 0.0,
                &[],
            ),
            None,
        )
    }

    fn level(z: f64, rho: f64, phi: f64) -> UavState {
        UavState {
            x: 0.0,
            y: 0.0,
            z,
            theta: 0.0,
            rho,
            phi,
            omega: 0.0,
            t: 0.0,
        }
    }

    fn straight_path(terrain: &Terrain, spec: &UavSpec, state: &UavState) -> PredictedPath {
        let u = ScalarField {
            values: terrain.mesh.points().iter().map(|p| p.x).collect(),
        };
        build_predicted_path(state, &terrain.mesh, &u, spec, 1.0, 0.0)
    }

    fn constant_trial(
        rho: f64,
        phi: f64,
        z: f64,
        spec: &UavSpec,
        terrain: &Terrain,
    ) -> (TrialTrajectory, PredictedPath) {
        let s = level(z, rho, phi);
        let path = straight_path(terrain, spec, &s);
        let w = RegimeVector([rho, rho, phi, phi]);
        (trial_for(&w, &s, &path, spec, terrain), path)
    }

    #[test]
    fn identity_regime_follows_path() {
        let t = flat(1000.0);
        let a = uav_a();
        let (trial, path) = constant_trial(1.0, 0.0, 50.0, &a, &t);
        for j in 0..trial.len() {
            assert_relative_eq!(trial.x[j], path.x[j], epsilon = 1e-9);
            assert_relative_eq!(trial.y[j], path.y[j], epsilon = 1e-9);
            assert_eq!(trial.z[j], 50.0);
        }
        assert!(!trial.clamped);
    }

    #[test]
    fn half_speed_half_path() {
        let t = flat(1000.0);
        let a = uav_a();
        let (trial, path) = constant_trial(0.5, 0.0, 50.0, &a, &t);
        assert_relative_eq!(
            *trial.s.last().unwrap(),
            0.5 * path.length(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn vertical_ascent() {
        let t = flat(1000.0);
        let a = uav_a();
        let (trial, _) = constant_trial(1.0, FRAC_PI_2, 50.0, &a, &t);
        for j in 0..trial.len() {
            assert!(trial.s[j].abs() < 1e-9);
            assert_relative_eq!(trial.z[j], 50.0 + 5.0 * j as f64, epsilon = 1e-9);
            assert!(trial.omega[j].abs() < 1e-12);
        }
    }

    #[test]
    fn objective_identities() {
        let t = flat(1000.0);
        let a = uav_a();
        let (trial, _) = constant_trial(1.0, 0.0, 50.0, &a, &t);
        assert_relative_eq!(objective(&trial, &a), 0.0, epsilon = 1e-15);
        let (trial, _) = constant_trial(0.5, 0.0, 50.0, &a, &t);
        assert_relative_eq!(objective(&trial, &a), 0.5, epsilon = 1e-12);
        let (trial, _) = constant_trial(1.0, 0.0, 100.0, &a, &t);
        assert_relative_eq!(objective(&trial, &a), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constraint_identities() {
        let t = flat(1000.0);
        let a = uav_a();
        let (trial, _) = constant_trial(1.0, 0.0, 50.0, &a, &t);
        assert!(constraints(&trial, &a).0.iter().all(|c| c.abs() < 1e-15));
        let (trial, _) = constant_trial(1.0, 0.0, 15.0, &a, &t);
        assert_relative_eq!(constraints(&trial, &a).altitude(), 0.5, epsilon = 1e-12);
        // jump from hover to full speed within the first step
        let s = level(50.0, 0.0, 0.0);
        let path = straight_path(&t, &a, &s);
        let (rho, phi) = (vec![1.0; 21], vec![0.0; 21]);
        let mut rho0 = rho.clone();
        rho0[0] = 0.0;
        let trial = build_trial(&path, rho0, phi, &anchors_of(&s, &a), &a, &t);
        assert_relative_eq!(trial.a_s[0], 10.0);
        assert!(constraints(&trial, &a).0[6] > 0.0);
    }

    #[test]
    fn flat_terrain_keeps_cruise() {
        let t = flat(2000.0);
        let a = uav_a();
        let s = level(50.0, 1.0, 0.0);
        let path = straight_path(&t, &a, &s);
        let o = optimize_regime(&s, &path, &t, &a).unwrap();
        assert_eq!(o.seed, 0);
        assert!(o.objective <= 1e-3);
        let (rho, phi, omega) = extract_controls(&o.trial);
        assert_relative_eq!(rho, 1.0, epsilon = 1e-9);
        assert_relative_eq!(phi, 0.0, epsilon = 1e-9);
        assert_eq!(omega, 0.0);
    }

    #[test]
    fn wall_ahead_needs_climbing_seed() {
        // 60° ramp starting 40 m ahead
        let ramp = |x: f64, _y: f64| {
            if x > 40.0 {
                (x - 40.0) * 3f64.sqrt()
            } else {
                0.0
            }
        };
        let t = Terrain::new(
            grid_mesh((-500.0, -500.0), (1000.0, 1000.0), (100, 100), ramp, &[]),
            None,
        );
        let a = uav_a();
        let s = level(50.0, 0.5, FRAC_PI_2);
        let path = straight_path(&t, &a, &s);
        let w0a = seed_vector(&SEEDS[0], &a);
        let tra = trial_for(&w0a, &s, &path, &a, &t);
        assert!(constraints(&tra, &a).altitude() > 0.0);
        let o = optimize_regime(&s, &path, &t, &a).unwrap();
        assert!(o.seed >= 1);
        assert!(o.trial.phi[1] > 0.5);
    }

    #[test]
    fn box_canyon_is_infeasible() {
        let wall = |x: f64, _y: f64| if x > 5.0 { 2000.0 } else { 0.0 };
        let t = Terrain::new(
            grid_mesh((-500.0, -500.0), (1000.0, 1000.0), (100, 100), wall, &[]),
            None,
        );
        let a = uav_a();
        let s = level(50.0, 1.0, 0.0);
        let path = straight_path(&t, &a, &s);
        assert!(optimize_regime(&s, &path, &t, &a).is_none());
        // no regime on a coarse grid over the box is feasible either
        let (lo, hi) = regime_bounds(&a);
        let g = |k: usize, i: usize| lo[k] + (hi[k] - lo[k]) * i as f64 / 6.0;
        for i in 0..=6 {
            for j in 0..=6 {
                for k in 0..=6 {
                    for l in 0..=6 {
                        let w = RegimeVector([g(0, i), g(1, j), g(2, k), g(3, l)]);
                        assert!(!trial_feasible(&trial_for(&w, &s, &path, &a, &t), &a));
                    }
                }
            }
        }
    }

    #[test]
    fn escape_over_flat_ground() {
        let t = flat(2000.0);
        let a = uav_a();
        let r = escape_feasible(&level(50.0, 1.0, 0.0), Side::Left, &a, &t, 1.0);
        assert!(r.feasible);
        let c = r.first.unwrap();
        assert_relative_eq!(a.velocities(c.rho, c.phi).0, 10.0 - 3.6, epsilon = 1e-9);
        assert!(c.omega > 0.0);
    }

    #[test]
    fn escape_blocked_by_step() {
        // 300 m step on the left-hand arc flown while braking
        let step = |x: f64, y: f64| if y > 1.0 && x > 3.0 { 300.0 } else { 0.0 };
        let t = Terrain::new(
            grid_mesh((-100.0, -100.0), (200.0, 200.0), (100, 100), step, &[]),
            None,
        );
        let a = uav_a();
        let r = escape_feasible(&level(50.0, 1.0, 0.0), Side::Left, &a, &t, 1.0);
        assert!(!r.feasible);
        assert_eq!(r.failure, Some(EscapeFailure::Altitude));
        assert!(escape_feasible(&level(50.0, 1.0, 0.0), Side::Right, &a, &t, 1.0).feasible);
    }

    #[test]
    fn fixed_wing_flies_full_circle() {
        let t = flat(3000.0);
        let c = uav_c();
        let r = escape_feasible(&level(150.0, 1.0, 0.0), Side::Right, &c, &t, 2.0);
        assert!(r.feasible);
        // v_s never drops below ~4.9 m/s, so a full circle of radius 100 takes over 60 s
        assert!(r.steps as f64 * 2.0 > 60.0, "{r:?}");
        assert!(r.first.unwrap().rho >= c.rho_min());
    }

    #[test]
    fn apply_prefers_optimal() {
        let t = flat(2000.0);
        let a = uav_a();
        let s = level(50.0, 1.0, 0.0);
        let d = apply_or_escape(
            &s,
            Some((1.0, 0.0, 0.1, 0.0)),
            Side::Left,
            Side::Right,
            &a,
            &t,
            1.0,
        );
        assert_eq!(d.source, ControlSource::Optimal);
        assert_eq!(d.side, Side::Left);
        let d = apply_or_escape(&s, None, Side::Left, Side::Right, &a, &t, 1.0);
        assert_eq!(d.source, ControlSource::Escape);
        assert_eq!(d.side, Side::Right);
        assert!(d.omega < 0.0);
    }

    #[test]
    fn cliff_after_one_step_forces_escape_now() {
        // plateau to the right of the track: the right-hand circle from the
        // next state hits it, the left-hand circle from now does not
        let cliff = |_x: f64, y: f64| if y < -1.0 { 1000.0 } else { 0.0 };
        let t = Terrain::new(
            grid_mesh((-100.0, -100.0), (200.0, 200.0), (100, 100), cliff, &[]),
            None,
        );
        let a = uav_a();
        let s = level(50.0, 1.0, 0.0);
        assert!(escape_feasible(&s, Side::Left, &a, &t, 1.0).feasible);
        let d = apply_or_escape(
            &s,
            Some((1.0, 0.0, 0.0, 0.0)),
            Side::Right,
            Side::Left,
            &a,
            &t,
            1.0,
        );
        assert_eq!(d.source, ControlSource::Escape);
        assert_eq!(d.side, Side::Left);
        assert!(!d.unvalidated_escape);
    }

    #[test]
    fn msgs_never_worse_than_seed() {
        let ramp = |x: f64, y: f64| 0.05 * x + 10.0 * (y / 50.0).sin();
        let t = Terrain::new(
            grid_mesh((-500.0, -500.0), (1000.0, 1000.0), (60, 60), ramp, &[]),
            None,
        );
        let a = uav_a();
        let s = level(60.0, 1.0, 0.0);
        let path = straight_path(&t, &a, &s);
        let o = optimize_regime(&s, &path, &t, &a).unwrap();
        let seed = seed_vector(&SEEDS[o.seed], &a);
        let f0 = objective(&trial_for(&seed, &s, &path, &a, &t), &a);
        assert!(o.objective <= f0);
        assert!(trial_feasible(&o.trial, &a));
    }
}
