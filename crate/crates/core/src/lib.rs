pub mod fields;
pub mod geometry;
pub mod guidance;
pub mod motion;
pub mod mpc;
pub mod scenarios;
pub mod sensing;
pub mod sim;
pub mod synthetic;
pub mod terrain;

pub use fields::{HedacParams, ProbabilityInit, ScalarField};
pub use geometry::{Circle, Side};
pub use motion::{UavKind, UavSpec, UavState};
pub use sensing::{SensingFunction, SensorSpec};
pub use sim::{Scenario, ScenarioConfig, SimError, Simulation, StepRecord, Summary};
pub use terrain::{InclineReport, Terrain, TerrainMesh};
