//! Search domain: triangulated mesh with elevation, optional DEM raster,
//! and the incline compatibility audit.

mod dem;
mod grid;
mod incline;
mod mesh;
mod msh;

use std::path::{Path, PathBuf};

use nalgebra::Point2;

pub use dem::DemGrid;
pub use incline::{
    incline_audit, max_terrain_incline, supported_incline, InclineEntry, InclineReport,
};
pub use mesh::{BoundaryLoop, LoopKind, TaggedEdge, TerrainMesh};
pub use msh::{load_mesh, parse_msh, write_msh};

#[derive(Debug, thiserror::Error)]
pub enum TerrainError {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("invalid mesh: {entity} {message}")]
    Validation { entity: String, message: String },
    #[error("point ({x:.3}, {y:.3}) is outside the search domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Longest horizontal step between ray-trace probes.
pub const MAX_PROBE_STEP: f64 = 10.0;

/// Mesh plus optional raster used for line-of-sight probes.
#[derive(Debug, Clone)]
pub struct Terrain {
    pub mesh: TerrainMesh,
    pub dem: Option<DemGrid>,
}

impl Terrain {
    pub fn new(mesh: TerrainMesh, dem: Option<DemGrid>) -> Self {
        Self { mesh, dem }
    }

    pub fn load(mesh: impl AsRef<Path>, dem: Option<&Path>) -> Result<Self, TerrainError> {
        let mesh = load_mesh(mesh)?;
        let dem = dem.map(DemGrid::load).transpose()?;
        Ok(Self { mesh, dem })
    }

    /// Terrain height used for control: mesh interpolation, falling back to
    /// the nearest node for points a hair outside the domain.
    pub fn surface_height(&self, p: Point2<f64>) -> f64 {
        match self.mesh.elevation_at(p) {
            Ok(z) => z,
            Err(_) => self.mesh.elevations()[self.mesh.nearest_node(p)],
        }
    }

    /// Terrain height for ray tracing: the raster when present, otherwise the
    /// mesh. `None` where neither covers `p` (e.g. inside a hole without DEM).
    pub fn probe_height(&self, p: Point2<f64>) -> Option<f64> {
        if let Some(dem) = &self.dem {
            if let Some(z) = dem.sample(p) {
                return Some(z);
            }
        }
        self.mesh.elevation_at(p).ok()
    }

    pub fn probe_step(&self) -> f64 {
        match &self.dem {
            Some(d) => d.cellsize.min(MAX_PROBE_STEP),
            None => MAX_PROBE_STEP,
        }
    }
}
