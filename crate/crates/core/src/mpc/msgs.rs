//! Multi-scale grid (pattern) search over a 4-dimensional box.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsgsSettings {
    pub max_iterations: usize,
    pub max_stalls: usize,
    pub target: f64,
    /// Initial step as a fraction of each box width.
    pub initial_scale: f64,
}

impl Default for MsgsSettings {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            max_stalls: 10,
            target: 1e-3,
            initial_scale: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Target,
    Iterations,
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsgsResult {
    pub x: [f64; 4],
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: StopReason,
    /// Step per axis when the search ended.
    pub final_step: [f64; 4],
}

/// Minimizes `f` starting from the feasible point `x0` with value `f0`.
/// `f` returns `None` for infeasible points, which are never accepted.
/// Each iteration tries ± one step along every axis (clamped to the box),
/// moves to the best improving point, and halves the step otherwise.
pub fn msgs_minimize(
    mut f: impl FnMut(&[f64; 4]) -> Option<f64>,
    x0: [f64; 4],
    f0: f64,
    lo: [f64; 4],
    hi: [f64; 4],
    settings: &MsgsSettings,
) -> MsgsResult {
    let mut x = x0;
    let mut fx = f0;
    let mut step: [f64; 4] = std::array::from_fn(|k| settings.initial_scale * (hi[k] - lo[k]));
    let mut stalls = 0;
    let mut evaluations = 0;
    let mut iterations = 0;
    let stop = loop {
        if fx <= settings.target {
            break StopReason::Target;
        }
        if iterations >= settings.max_iterations {
            break StopReason::Iterations;
        }
        if stalls >= settings.max_stalls {
            break StopReason::Stalled;
        }
        iterations += 1;
        let mut best: Option<([f64; 4], f64)> = None;
        for k in 0..4 {
            for dir in [1.0, -1.0] {
                let mut y = x;
                y[k] = (x[k] + dir * step[k]).clamp(lo[k], hi[k]);
                if y[k] == x[k] {
                    continue;
                }
                evaluations += 1;
                if let Some(fy) = f(&y) {
                    if fy < best.map_or(fx, |b| b.1) {
                        best = Some((y, fy));
                    }
                }
            }
        }
        match best {
            Some((y, fy)) => {
                x = y;
                fx = fy;
                stalls = 0;
            }
            None => {
                for s in &mut step {
                    *s *= 0.5;
                }
                stalls += 1;
            }
        }
    };
    MsgsResult {
        x,
        f: fx,
        iterations,
        evaluations,
        stop,
        final_step: step,
    }
}
