//! TOML scenario files and the validation shared by `run` and `validate`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fields::{GaussianComponent, HedacParams, ProbabilityInit};
use crate::motion::presets::default_omega_lim;
use crate::motion::{UavKind, UavSpec, UavState};
use crate::sensing::{SensingFunction, SensorSpec};
use crate::terrain::{incline_audit, InclineReport, Terrain};

use super::{Scenario, SimError, Simulation};

/// Relative tolerance when checking that the duration is a multiple of Δt.
const STEP_MULTIPLE_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("`{field}`: {message}")]
    Field { field: String, message: String },
    #[error("{}", Findings(.0))]
    Many(Vec<ConfigError>),
}

struct Findings<'a>(&'a [ConfigError]);

impl fmt::Display for Findings<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl ConfigError {
    pub fn field(field: &str, message: impl Into<String>) -> Self {
        Self::Field {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Individual findings, flattened.
    pub fn findings(&self) -> Vec<&ConfigError> {
        match self {
            Self::Many(v) => v.iter().flat_map(|e| e.findings()).collect(),
            e => vec![e],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Gmsh mesh path, relative to the config file.
    pub mesh: PathBuf,
    /// Optional ESRI ASCII raster used for line-of-sight probes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dem: Option<PathBuf>,
    pub dt: f64,
    pub duration: f64,
    /// Reserved; every stage of the pipeline is deterministic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub override_incline: bool,
    pub hedac: HedacParams,
    pub probability: ProbabilityConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub uav_types: BTreeMap<String, UavTypeConfig>,
    pub fleet: Vec<FleetEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProbabilityConfig {
    Uniform,
    Gaussians {
        components: Vec<GaussianComponent>,
        #[serde(default)]
        background: f64,
    },
    /// Nodal CSV with `node_id` and `value` columns.
    Nodal {
        file: PathBuf,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Field snapshot every this many steps; 0 writes only the final one.
    #[serde(default)]
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavTypeConfig {
    pub kind: UavKind,
    pub v_s_max: f64,
    pub v_s_min: f64,
    pub v_z_max: f64,
    pub v_z_min: f64,
    pub a_s_max: f64,
    pub a_s_min: f64,
    pub a_z_max: f64,
    pub a_z_min: f64,
    pub phi_min_deg: f64,
    pub phi_max_deg: f64,
    /// rad/s; defaults by kind when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_lim: Option<f64>,
    pub r_min: f64,
    pub delta: f64,
    pub h_min: f64,
    pub h_goal: f64,
    pub gamma1_deg: f64,
    pub gamma2_deg: f64,
    pub sensing: SensingFunction,
    pub n_pts: usize,
}

impl UavTypeConfig {
    pub fn to_spec(&self, name: &str) -> UavSpec {
        UavSpec {
            name: name.to_string(),
            kind: self.kind,
            v_s_max: self.v_s_max,
            v_s_min: self.v_s_min,
            v_z_max: self.v_z_max,
            v_z_min: self.v_z_min,
            a_s_max: self.a_s_max,
            a_s_min: self.a_s_min,
            a_z_max: self.a_z_max,
            a_z_min: self.a_z_min,
            phi_min: self.phi_min_deg.to_radians(),
            phi_max: self.phi_max_deg.to_radians(),
            omega_lim: self
                .omega_lim
                .unwrap_or_else(|| default_omega_lim(self.kind)),
            r_min: self.r_min,
            delta: self.delta,
            h_min: self.h_min,
            h_goal: self.h_goal,
            sensor: SensorSpec {
                gamma1: self.gamma1_deg.to_radians(),
                gamma2: self.gamma2_deg.to_radians(),
                function: self.sensing,
            },
            n_pts: self.n_pts,
        }
    }

    pub fn from_spec(spec: &UavSpec) -> Self {
        Self {
            kind: spec.kind,
            v_s_max: spec.v_s_max,
            v_s_min: spec.v_s_min,
            v_z_max: spec.v_z_max,
            v_z_min: spec.v_z_min,
            a_s_max: spec.a_s_max,
            a_s_min: spec.a_s_min,
            a_z_max: spec.a_z_max,
            a_z_min: spec.a_z_min,
            phi_min_deg: spec.phi_min.to_degrees(),
            phi_max_deg: spec.phi_max.to_degrees(),
            omega_lim: Some(spec.omega_lim),
            r_min: spec.r_min,
            delta: spec.delta,
            h_min: spec.h_min,
            h_goal: spec.h_goal,
            gamma1_deg: spec.sensor.gamma1.to_degrees(),
            gamma2_deg: spec.sensor.gamma2.to_degrees(),
            sensing: spec.sensor.function,
            n_pts: spec.n_pts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetEntry {
    pub uav_type: String,
    pub x: f64,
    pub y: f64,
    /// Initial height above terrain, m.
    pub altitude: f64,
    pub heading_deg: f64,
    pub rho: f64,
    pub phi_deg: f64,
}

/// True when the lateral footprint at h_goal is narrower than the
/// minimum turning diameter.
fn fleet_types(fleet: &[(String, UavSpec)]) -> Vec<UavSpec> {
    let mut out: Vec<UavSpec> = Vec::new();
    for (_, s) in fleet {
        if !out.iter().any(|o| o.name == s.name) {
            out.push(s.clone());
        }
    }
    out
}

pub fn degenerate_fov(spec: &UavSpec) -> bool {
    2.0 * spec.h_goal * (0.5 * spec.sensor.gamma1).tan() < 2.0 * spec.r_min
}

/// A scenario that passed every check `run` performs.
#[derive(Debug, Clone)]
pub struct ValidatedScenario {
    pub config: ScenarioConfig,
    pub scenario: Scenario,
    pub incline: InclineReport,
    pub warnings: Vec<String>,
    /// The incline audit failed but the override was set.
    pub incline_overridden: bool,
}

impl ValidatedScenario {
    pub fn simulation(&self) -> Result<Simulation, SimError> {
        Simulation::with_incline_check(self.scenario.clone(), !self.incline_overridden)
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}

pub fn parse_config(text: &str, name: &str) -> Result<ScenarioConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: name.to_string(),
        message: e.to_string(),
    })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read_nodal(path: &Path, n: usize) -> Result<Vec<f64>, ConfigError> {
    let fail =
        |m: String| ConfigError::field("probability.file", format!("{}: {m}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| fail(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| fail(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| fail(format!("missing `{name}` column")))
    };
    let (id_col, val_col) = (col("node_id")?, col("value")?);
    let mut values = vec![f64::NAN; n];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| fail(e.to_string()))?;
        let parse = |c: usize| rec.get(c).map(str::trim).unwrap_or("");
        let id: usize = parse(id_col)
            .parse()
            .map_err(|_| fail(format!("row {}: bad node_id", line + 2)))?;
        let v: f64 = parse(val_col)
            .parse()
            .map_err(|_| fail(format!("row {}: bad value", line + 2)))?;
        if id >= n {
            return Err(fail(format!(
                "row {}: node {id} out of range (mesh has {n} nodes)",
                line + 2
            )));
        }
        values[id] = v;
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(fail(format!("no value for node {i}")));
    }
    Ok(values)
}

impl ScenarioConfig {
    /// Field-level checks that need no files.
    pub fn check_fields(&self) -> Result<Vec<(String, UavSpec)>, ConfigError> {
        let mut errs = Vec::new();
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            errs.push(ConfigError::field(
                "dt",
                format!("must be positive, got {}", self.dt),
            ));
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            errs.push(ConfigError::field(
                "duration",
                format!("must be nonnegative, got {}", self.duration),
            ));
        } else if self.dt > 0.0 {
            let k = self.duration / self.dt;
            if (k - k.round()).abs() > STEP_MULTIPLE_TOL * k.max(1.0) {
                errs.push(ConfigError::field(
                    "duration",
                    format!("{} is not a multiple of dt = {}", self.duration, self.dt),
                ));
            }
        }
        if let Err(m) = self.hedac.validate() {
            errs.push(ConfigError::field("hedac", m));
        }
        if let ProbabilityConfig::Gaussians {
            components,
            background,
        } = &self.probability
        {
            if components.is_empty() && *background <= 0.0 {
                errs.push(ConfigError::field(
                    "probability",
                    "no components and no positive background",
                ));
            }
        }
        let mut specs = BTreeMap::new();
        for (name, t) in &self.uav_types {
            let spec = t.to_spec(name);
            match spec.validate() {
                Ok(()) => {
                    specs.insert(name.clone(), spec);
                }
                Err(e) => errs.push(ConfigError::field(&format!("uav_types.{name}"), e.message)),
            }
        }
        if self.fleet.is_empty() {
            errs.push(ConfigError::field("fleet", "must contain at least one UAV"));
        }
        let mut fleet = Vec::new();
        for (i, f) in self.fleet.iter().enumerate() {
            let field = format!("fleet[{i}]");
            if !self.uav_types.contains_key(&f.uav_type) {
                errs.push(ConfigError::field(
                    &field,
                    format!("unknown uav_type `{}`", f.uav_type),
                ));
                continue;
            }
            let Some(spec) = specs.get(&f.uav_type) else {
                continue;
            };
            if !(f.altitude >= spec.h_min) {
                errs.push(ConfigError::field(
                    &format!("{field}.altitude"),
                    format!("{} is below h_min = {}", f.altitude, spec.h_min),
                ));
            }
            if let Err(e) = spec.velocity_components(f.rho, f.phi_deg.to_radians()) {
                errs.push(ConfigError::field(&field, e.message));
            }
            fleet.push((f.uav_type.clone(), spec.clone()));
        }
        if errs.is_empty() {
            Ok(fleet)
        } else {
            Err(ConfigError::Many(errs))
        }
    }

    /// Loads the mesh and optional DEM, resolving paths against `base`.
    pub fn load_terrain(&self, base: &Path) -> Result<Terrain, SimError> {
        let mesh_path = resolve(base, &self.mesh);
        let dem_path = self.dem.as_ref().map(|d| resolve(base, d));
        Ok(Terrain::load(&mesh_path, dem_path.as_deref())?)
    }

    /// Incline audit of the UAV types in the fleet against `terrain`, one
    /// entry per type in order of first appearance.
    pub fn incline_report(&self, terrain: &Terrain) -> Result<InclineReport, SimError> {
        let specs = fleet_types(&self.check_fields()?);
        Ok(incline_audit(&terrain.mesh, &specs)?)
    }

    /// Full validation: fields, terrain files, fleet placement and the
    /// incline audit. `base` resolves relative paths.
    pub fn validate(
        &self,
        base: &Path,
        override_incline: bool,
    ) -> Result<ValidatedScenario, SimError> {
        self.check_fields()?;
        let terrain = self.load_terrain(base)?;
        self.validate_with_terrain(terrain, base, override_incline)
    }

    /// As [`ScenarioConfig::validate`] with the terrain already loaded; the
    /// `mesh` and `dem` keys are ignored.
    pub fn validate_with_terrain(
        &self,
        terrain: Terrain,
        base: &Path,
        override_incline: bool,
    ) -> Result<ValidatedScenario, SimError> {
        let fleet_specs = self.check_fields()?;
        let probability = match &self.probability {
            ProbabilityConfig::Uniform => ProbabilityInit::Uniform,
            ProbabilityConfig::Gaussians {
                components,
                background,
            } => ProbabilityInit::Gaussians {
                components: components.clone(),
                background: *background,
            },
            ProbabilityConfig::Nodal { file } => {
                ProbabilityInit::Nodal(read_nodal(&resolve(base, file), terrain.mesh.node_count())?)
            }
        };
        let mut fleet = Vec::with_capacity(self.fleet.len());
        for (i, (f, (_, spec))) in self.fleet.iter().zip(&fleet_specs).enumerate() {
            let p = nalgebra::Point2::new(f.x, f.y);
            if !terrain.mesh.contains(p) {
                return Err(ConfigError::field(
                    &format!("fleet[{i}]"),
                    format!("initial position ({}, {}) is outside the domain", f.x, f.y),
                )
                .into());
            }
            let state = UavState {
                x: f.x,
                y: f.y,
                z: terrain.surface_height(p) + f.altitude,
                theta: f.heading_deg.to_radians(),
                rho: f.rho,
                phi: f.phi_deg.to_radians(),
                omega: 0.0,
                t: 0.0,
            };
            fleet.push((spec.clone(), state));
        }
        let specs = fleet_types(&fleet_specs);
        let incline = incline_audit(&terrain.mesh, &specs)?;
        let override_incline = override_incline || self.override_incline;
        let incline_overridden = !incline.all_compatible() && override_incline;
        let mut warnings = Vec::new();
        for s in &specs {
            if degenerate_fov(s) {
                warnings.push(format!(
                    "UAV type {}: lateral footprint {:.1} m at h_goal is narrower than the turning diameter {:.1} m; \
                     the UAV may circle without covering new ground",
                    s.name,
                    2.0 * s.h_goal * (0.5 * s.sensor.gamma1).tan(),
                    2.0 * s.r_min
                ));
            }
        }
        if incline_overridden {
            warnings.push(format!(
                "terrain incline {:.1}° exceeds the supported incline of some UAV types; continuing on override",
                incline.terrain_max.to_degrees()
            ));
        }
        let steps = if self.dt > 0.0 {
            (self.duration / self.dt).round() as usize
        } else {
            0
        };
        let scenario = Scenario {
            terrain,
            params: self.hedac,
            dt: self.dt,
            steps,
            fleet,
            probability,
        };
        // construct once so placement and solver errors surface here too
        Simulation::with_incline_check(scenario.clone(), !override_incline)?;
        Ok(ValidatedScenario {
            config: self.clone(),
            scenario,
            incline,
            warnings,
            incline_overridden,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::presets::uav_a;

    fn sample() -> String {
        let a = UavTypeConfig::from_spec(&uav_a());
        let cfg = ScenarioConfig {
            mesh: "m.msh".into(),
            dem: None,
            dt: 1.0,
            duration: 10.0,
            seed: None,
            override_incline: false,
            hedac: HedacParams {
                alpha: 1.0,
                beta: 1.0,
            },
            probability: ProbabilityConfig::Uniform,
            output: OutputConfig::default(),
            uav_types: [("A".to_string(), a)].into_iter().collect(),
            fleet: vec![FleetEntry {
                uav_type: "A".into(),
                x: 0.0,
                y: 0.0,
                altitude: 50.0,
                heading_deg: 0.0,
                rho: 1.0,
                phi_deg: 0.0,
            }],
        };
        cfg.to_toml()
    }

    #[test]
    fn roundtrip() {
        let text = sample();
        let cfg = parse_config(&text, "x").unwrap();
        assert_eq!(parse_config(&cfg.to_toml(), "x").unwrap(), cfg);
        assert!(cfg.check_fields().is_ok());
    }

    #[test]
    fn zero_dt_names_field() {
        let text = sample().replace("dt = 1.0", "dt = 0.0");
        let err = parse_config(&text, "x")
            .unwrap()
            .check_fields()
            .unwrap_err();
        assert!(err.to_string().contains("`dt`"), "{err}");
    }

    #[test]
    fn h_min_above_h_goal_rejected() {
        let text = sample().replace("h_min = 30.0", "h_min = 60.0");
        let err = parse_config(&text, "x")
            .unwrap()
            .check_fields()
            .unwrap_err();
        assert!(err.to_string().contains("h_min < h_goal"), "{err}");
    }

    #[test]
    fn omega_lim_default_by_kind() {
        let text = sample().replace("omega_lim = 1.0\n", "");
        let cfg = parse_config(&text, "x").unwrap();
        assert!(cfg.uav_types["A"].omega_lim.is_none());
        assert_eq!(cfg.uav_types["A"].to_spec("A").omega_lim, 1.0);
    }

    #[test]
    fn missing_key_rejected() {
        let text = sample().replace("r_min = 25.0\n", "");
        assert!(matches!(
            parse_config(&text, "x"),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn unknown_key_rejected() {
        let text = sample().replace("dt = 1.0", "dt = 1.0\nbogus = 3");
        assert!(parse_config(&text, "x").is_err());
    }

    #[test]
    fn duration_multiple_of_dt() {
        let text = sample().replace("duration = 10.0", "duration = 10.5");
        let err = parse_config(&text, "x")
            .unwrap()
            .check_fields()
            .unwrap_err();
        assert!(err.to_string().contains("`duration`"));
    }

    #[test]
    fn degenerate_fov_detection() {
        let mut a = uav_a();
        assert!(!degenerate_fov(&a));
        a.sensor.gamma1 = 20f64.to_radians();
        assert!(degenerate_fov(&a));
    }
}
