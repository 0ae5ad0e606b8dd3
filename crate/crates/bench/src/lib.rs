//! Fixtures shared by the benchmarks.

use hedac_core::scenarios;
use hedac_core::Simulation;

/// Rugged scenario shortened to `steps` control steps.
pub fn rugged_simulation(steps: usize) -> Simulation {
    let mut s = scenarios::rugged();
    s.config.duration = steps as f64;
    s.validate()
        .and_then(|v| v.simulation())
        .expect("scripted scenario validates")
}

/// Crater scenario shortened to `steps` control steps.
pub fn crater_simulation(steps: usize) -> Simulation {
    let mut s = scenarios::crater();
    s.config.duration = steps as f64;
    s.validate()
        .and_then(|v| v.simulation())
        .expect("scripted scenario validates")
}
