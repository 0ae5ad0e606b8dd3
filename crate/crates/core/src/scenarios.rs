//! Scripted scenarios on synthetic terrains: rugged hills with three
//! multi-rotors, a dune field with two fixed-wings, and a crater with a
//! mixed fleet around a no-fly zone. Plus a single-UAV search of a small
//! area of interest with a narrow camera and with the stock one.

use std::path::{Path, PathBuf};

use crate::fields::{GaussianComponent, HedacParams};
use crate::motion::presets::{uav_a, uav_b, uav_c};
use crate::motion::UavSpec;
use crate::sim::{
    ConfigError, FleetEntry, OutputConfig, ProbabilityConfig, ScenarioConfig, SimError,
    UavTypeConfig, ValidatedScenario,
};
use crate::synthetic::{crater_height, dunes_height, grid_mesh, rugged_height, Rect};
use crate::terrain::{write_msh, Terrain, TerrainMesh};

/// Terrain mesh and configuration of a scripted scenario.
#[derive(Debug, Clone)]
pub struct Scripted {
    pub name: &'static str,
    pub mesh: TerrainMesh,
    pub config: ScenarioConfig,
}

impl Scripted {
    /// Validated in-memory scenario, without touching the filesystem.
    pub fn validate(&self) -> Result<ValidatedScenario, SimError> {
        let terrain = Terrain::new(self.mesh.clone(), None);
        self.config
            .validate_with_terrain(terrain, Path::new("."), false)
    }

    /// Writes `<name>.msh` and `<name>.toml` into `dir`; returns the config path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, SimError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| SimError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let mesh_path = dir.join(format!("{}.msh", self.name));
        std::fs::write(&mesh_path, write_msh(&self.mesh)).map_err(io(&mesh_path))?;
        let cfg_path = dir.join(format!("{}.toml", self.name));
        std::fs::write(&cfg_path, self.config.to_toml()).map_err(io(&cfg_path))?;
        Ok(cfg_path)
    }
}

fn fleet(entries: &[(&str, f64, f64, f64)], spec_of: impl Fn(&str) -> UavSpec) -> Vec<FleetEntry> {
    entries
        .iter()
        .map(|&(t, x, y, heading)| FleetEntry {
            uav_type: t.to_string(),
            x,
            y,
            altitude: spec_of(t).h_goal,
            heading_deg: heading,
            rho: 1.0,
            phi_deg: 0.0,
        })
        .collect()
}

fn config(
    name: &str,
    dt: f64,
    duration: f64,
    hedac: HedacParams,
    types: &[UavSpec],
    fleet: Vec<FleetEntry>,
) -> ScenarioConfig {
    ScenarioConfig {
        mesh: format!("{name}.msh").into(),
        dem: None,
        dt,
        duration,
        seed: None,
        override_incline: false,
        hedac,
        probability: ProbabilityConfig::Uniform,
        output: OutputConfig { snapshot_stride: 0 },
        uav_types: types
            .iter()
            .map(|s| (s.name.clone(), UavTypeConfig::from_spec(s)))
            .collect(),
        fleet,
    }
}

fn spec_by_name(name: &str) -> UavSpec {
    match name {
        "A" => uav_a(),
        "B" => uav_b(),
        "C" => uav_c(),
        _ => unreachable!("scripted fleets only use A, B and C"),
    }
}

/// 850 m square of exaggerated hills, 92 × 92 nodes, three UAV A, 15 minutes.
pub fn rugged() -> Scripted {
    let mesh = grid_mesh((0.0, 0.0), (850.0, 850.0), (91, 91), rugged_height, &[]);
    let entries = [
        ("A", 150.0, 100.0, 90.0),
        ("A", 425.0, 100.0, 90.0),
        ("A", 700.0, 100.0, 90.0),
    ];
    Scripted {
        name: "rugged",
        mesh,
        config: config(
            "rugged",
            1.0,
            900.0,
            HedacParams {
                alpha: 1000.0,
                beta: 0.1,
            },
            &[uav_a()],
            fleet(&entries, spec_by_name),
        ),
    }
}

/// 2.74 km square dune field, 148 × 148 nodes, two UAV C, one hour.
pub fn dunes() -> Scripted {
    let mesh = grid_mesh((0.0, 0.0), (2740.0, 2740.0), (147, 147), dunes_height, &[]);
    let entries = [("C", 500.0, 400.0, 90.0), ("C", 2240.0, 400.0, 90.0)];
    Scripted {
        name: "dunes",
        mesh,
        config: config(
            "dunes",
            2.0,
            3600.0,
            HedacParams {
                alpha: 500.0,
                beta: 0.1,
            },
            &[uav_c()],
            fleet(&entries, spec_by_name),
        ),
    }
}

/// No-fly rectangle of the crater scenario.
pub const CRATER_NO_FLY: Rect = Rect {
    x0: 1950.0,
    y0: 1950.0,
    x1: 2300.0,
    y1: 2300.0,
};

/// 2.73 km square volcanic crater with a no-fly zone, 141 × 141 nodes,
/// three UAV A and two UAV B, one hour.
pub fn crater() -> Scripted {
    let mesh = grid_mesh(
        (0.0, 0.0),
        (2728.0, 2728.0),
        (140, 140),
        crater_height,
        &[CRATER_NO_FLY],
    );
    let entries = [
        ("A", 300.0, 300.0, 90.0),
        ("A", 600.0, 300.0, 90.0),
        ("A", 900.0, 300.0, 90.0),
        ("B", 2400.0, 300.0, 90.0),
        ("B", 2400.0, 700.0, 180.0),
    ];
    Scripted {
        name: "crater",
        mesh,
        config: config(
            "crater",
            1.0,
            3600.0,
            HedacParams {
                alpha: 500.0,
                beta: 0.4,
            },
            &[uav_a(), uav_b()],
            fleet(&entries, spec_by_name),
        ),
    }
}

/// Lateral FOV angle of the narrow-camera variant, degrees.
pub const NARROW_GAMMA1_DEG: f64 = 20.0;

/// Default duration of the FOV variants, seconds.
pub const FOV_DURATION: f64 = 600.0;

/// Centre and spread of the area of interest in the FOV variants.
pub const FOV_TARGET: (f64, f64, f64) = (425.0, 425.0, 15.0);

fn fov_case(name: &'static str, gamma1_deg: f64, duration: f64) -> Scripted {
    let mut s = rugged();
    s.name = name;
    s.config.mesh = format!("{name}.msh").into();
    s.config.duration = duration;
    s.config.fleet.truncate(1);
    s.config.fleet[0].x = 425.0;
    let (x, y, sigma) = FOV_TARGET;
    s.config.probability = ProbabilityConfig::Gaussians {
        components: vec![GaussianComponent {
            x,
            y,
            sigma,
            weight: 1.0,
        }],
        background: 0.0,
    };
    for t in s.config.uav_types.values_mut() {
        t.gamma1_deg = gamma1_deg;
    }
    s
}

/// One UAV A over the rugged terrain searching a small area of interest,
/// with a lateral footprint narrower than its turning diameter.
pub fn narrow_fov(duration: f64) -> Scripted {
    fov_case("narrow_fov", NARROW_GAMMA1_DEG, duration)
}

/// The same search with the stock camera of UAV A.
pub fn wide_fov(duration: f64) -> Scripted {
    fov_case("wide_fov", uav_a().sensor.gamma1.to_degrees(), duration)
}

/// Every scripted scenario by name.
pub fn all() -> Vec<Scripted> {
    vec![
        rugged(),
        dunes(),
        crater(),
        narrow_fov(FOV_DURATION),
        wide_fov(FOV_DURATION),
    ]
}

pub fn by_name(name: &str) -> Result<Scripted, ConfigError> {
    match name {
        "rugged" => Ok(rugged()),
        "dunes" => Ok(dunes()),
        "crater" => Ok(crater()),
        "narrow_fov" => Ok(narrow_fov(FOV_DURATION)),
        "wide_fov" => Ok(wide_fov(FOV_DURATION)),
        _ => Err(ConfigError::field(
            "scenario",
            format!("unknown scenario `{name}`"),
        )),
    }
}
