use super::TerrainMesh;
use crate::motion::{SpecError, UavSpec};

#[derive(Debug, Clone, serde::Serialize)]
pub struct InclineEntry {
    pub name: String,
    /// Supported incline κ in radians.
    pub kappa: f64,
    pub compatible: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct InclineReport {
    pub entries: Vec<InclineEntry>,
    /// Steepest triangle of the terrain in radians.
    pub terrain_max: f64,
}

impl InclineReport {
    pub fn all_compatible(&self) -> bool {
        self.entries.iter().all(|e| e.compatible)
    }
}

pub fn max_terrain_incline(mesh: &TerrainMesh) -> f64 {
    (0..mesh.triangle_count())
        .map(|t| mesh.triangle_gradient(t, mesh.elevations()).norm().atan())
        .fold(0.0, f64::max)
}

pub fn supported_incline(spec: &UavSpec) -> Result<f64, SpecError> {
    if !(spec.delta > 0.0) {
        return Err(SpecError::new(
            &spec.name,
            format!("δ must be positive, got {}", spec.delta),
        ));
    }
    Ok((spec.h_min / spec.delta).atan())
}

pub fn incline_audit(mesh: &TerrainMesh, fleet: &[UavSpec]) -> Result<InclineReport, SpecError> {
    let terrain_max = max_terrain_incline(mesh);
    let entries = fleet
        .iter()
        .map(|s| {
            let kappa = supported_incline(s)?;
            Ok(InclineEntry {
                name: s.name.clone(),
                kappa,
                compatible: kappa > terrain_max,
            })
        })
        .collect::<Result<_, SpecError>>()?;
    Ok(InclineReport {
        entries,
        terrain_max,
    })
}
