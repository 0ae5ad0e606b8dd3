//! Nodal fields on the terrain mesh: target probability, coverage, and the
//! HEDAC potential solved with linear finite elements.

use nalgebra::{Point2, Vector2};
use sprs::{CsMat, FillInReduction, SymmetryCheck, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

use crate::terrain::TerrainMesh;

/// Integral threshold below which an initial distribution is rejected.
pub const MIN_PROBABILITY_MASS: f64 = 1e-12;
/// Gradient magnitude below which the direction is undefined.
pub const MIN_GRADIENT: f64 = 1e-14;

#[derive(Debug, Clone, thiserror::Error)]
pub enum FieldError {
    #[error("initial probability: {0}")]
    Config(String),
    #[error("internal field error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    pub fn from_values(mesh: &TerrainMesh, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != mesh.node_count() {
            return Err(FieldError::Config(format!(
                "expected {} nodal values, got {}",
                mesh.node_count(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::Config(format!(
                "value at node {i} is not finite"
            )));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HedacParams {
    pub alpha: f64,
    pub beta: f64,
}

impl HedacParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha > 0.0) || !(self.beta > 0.0) {
            return Err(format!(
                "HEDAC α and β must be positive, got α = {} and β = {}",
                self.alpha, self.beta
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GaussianComponent {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// Unnormalized description of the initial target probability.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbabilityInit {
    Uniform,
    /// Sum of isotropic Gaussians plus a constant background density.
    Gaussians {
        components: Vec<GaussianComponent>,
        background: f64,
    },
    Nodal(Vec<f64>),
}

pub fn integral(mesh: &TerrainMesh, field: &ScalarField) -> f64 {
    mesh.node_weights()
        .iter()
        .zip(&field.values)
        .map(|(w, v)| w * v)
        .sum()
}

/// Nonnegative nodal field with unit integral over the domain.
pub fn init_probability(
    desc: &ProbabilityInit,
    mesh: &TerrainMesh,
) -> Result<ScalarField, FieldError> {
    let raw: Vec<f64> = match desc {
        ProbabilityInit::Uniform => vec![1.0; mesh.node_count()],
        ProbabilityInit::Gaussians {
            components,
            background,
        } => {
            if *background < 0.0 {
                return Err(FieldError::Config("background density is negative".into()));
            }
            for (k, g) in components.iter().enumerate() {
                if !(g.sigma > 0.0) || g.weight < 0.0 {
                    return Err(FieldError::Config(format!(
                        "gaussian {k} needs σ > 0 and a nonnegative weight"
                    )));
                }
            }
            mesh.points()
                .iter()
                .map(|p| {
                    background
                        + components
                            .iter()
                            .map(|g| {
                                let d2 = (p - Point2::new(g.x, g.y)).norm_squared();
                                g.weight * (-0.5 * d2 / (g.sigma * g.sigma)).exp()
                                    / (std::f64::consts::TAU * g.sigma * g.sigma)
                            })
                            .sum::<f64>()
                })
                .collect()
        }
        ProbabilityInit::Nodal(values) => values.clone(),
    };
    let field = ScalarField::from_values(mesh, raw)?;
    if let Some(i) = field.values.iter().position(|&v| v < 0.0) {
        return Err(FieldError::Config(format!(
            "negative probability at node {i}"
        )));
    }
    let total = integral(mesh, &field);
    if !(total >= MIN_PROBABILITY_MASS) {
        return Err(FieldError::Config(format!(
            "distribution integrates to {total:e} over the domain"
        )));
    }
    Ok(ScalarField {
        values: field.values.into_iter().map(|v| v / total).collect(),
    })
}

/// c += Δt·ψ at the listed nodes.
pub fn accumulate_coverage(
    c: &mut ScalarField,
    psi: &[(usize, f64)],
    dt: f64,
) -> Result<(), FieldError> {
    for &(i, rate) in psi {
        if !(rate >= 0.0) {
            return Err(FieldError::Internal(format!(
                "detection rate {rate} at node {i}"
            )));
        }
        let slot = c
            .values
            .get_mut(i)
            .ok_or_else(|| FieldError::Internal(format!("node {i} out of range")))?;
        *slot += dt * rate;
    }
    Ok(())
}

pub fn undetected_probability(m0: &ScalarField, c: &ScalarField) -> ScalarField {
    ScalarField {
        values: m0
            .values
            .iter()
            .zip(&c.values)
            .map(|(m, c)| m * (-c).exp())
            .collect(),
    }
}

pub fn survey_accomplishment(mesh: &TerrainMesh, m: &ScalarField) -> f64 {
    1.0 - integral(mesh, m)
}

/// Assembled linear-FEM stiffness and consistent mass matrices.
pub struct FemMatrices {
    pub stiffness: CsMat<f64>,
    pub mass: CsMat<f64>,
}

pub fn assemble(mesh: &TerrainMesh) -> FemMatrices {
    let n = mesh.node_count();
    let mut k = TriMat::with_capacity((n, n), 9 * mesh.triangle_count());
    let mut m = TriMat::with_capacity((n, n), 9 * mesh.triangle_count());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        let p = tri.map(|v| mesh.point(v));
        let b = [p[1].y - p[2].y, p[2].y - p[0].y, p[0].y - p[1].y];
        let c = [p[2].x - p[1].x, p[0].x - p[2].x, p[1].x - p[0].x];
        for i in 0..3 {
            for j in 0..3 {
                k.add_triplet(tri[i], tri[j], (b[i] * b[j] + c[i] * c[j]) / (4.0 * area));
                let mass = if i == j { area / 6.0 } else { area / 12.0 };
                m.add_triplet(tri[i], tri[j], mass);
            }
        }
    }
    FemMatrices {
        stiffness: k.to_csc(),
        mass: m.to_csc(),
    }
}

/// Factorized (αK + βM) for repeated potential solves on one mesh.
pub struct PotentialSolver {
    mass: CsMat<f64>,
    factor: LdlNumeric<f64, usize>,
}

impl PotentialSolver {
    pub fn new(mesh: &TerrainMesh, params: HedacParams) -> Result<Self, FieldError> {
        params.validate().map_err(FieldError::Internal)?;
        let FemMatrices { stiffness, mass } = assemble(mesh);
        let system = &stiffness.map(|v| params.alpha * v) + &mass.map(|v| params.beta * v);
        let factor = Ldl::new()
            .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
            .check_symmetry(SymmetryCheck::DontCheckSymmetry)
            .numeric(system.view())
            .map_err(|e| FieldError::Internal(format!("factorization failed: {e}")))?;
        Ok(Self { mass, factor })
    }

    /// Solves (αK + βM)u = M·m.
    pub fn solve(&self, m: &ScalarField) -> Result<ScalarField, FieldError> {
        if m.len() != self.mass.rows() {
            return Err(FieldError::Internal(
                "source field does not match the mesh".into(),
            ));
        }
        let rhs = mat_vec(&self.mass, &m.values);
        let u: Vec<f64> = self.factor.solve(&rhs);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(FieldError::Internal(
                "potential solve produced non-finite values".into(),
            ));
        }
        Ok(ScalarField { values: u })
    }
}

/// y = A·x for a compressed-column matrix.
pub fn mat_vec(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    for (col, column) in a.outer_iterator().enumerate() {
        for (row, &v) in column.iter() {
            y[row] += v * x[col];
        }
    }
    y
}

/// Normalized gradient of `u` at `p`, or `None` where it vanishes.
pub fn gradient_direction(
    mesh: &TerrainMesh,
    u: &ScalarField,
    p: Point2<f64>,
) -> Result<Option<Vector2<f64>>, crate::terrain::TerrainError> {
    let (t, _) = mesh
        .locate(p)
        .ok_or(crate::terrain::TerrainError::OutsideDomain { x: p.x, y: p.y })?;
    let g = mesh.triangle_gradient(t, &u.values);
    let n = g.norm();
    Ok(if n < MIN_GRADIENT { None } else { Some(g / n) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Structured rectangle [0, w]×[0, h] with n×n cells.
    fn rect(w: f64, h: f64, n: usize) -> TerrainMesh {
        let mut nodes = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([w * i as f64 / n as f64, h * j as f64 / n as f64, 0.0]);
            }
        }
        let mut tris = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let a = j * (n + 1) + i;
                tris.push([a, a + 1, a + n + 2]);
                tris.push([a, a + n + 2, a + n + 1]);
            }
        }
        TerrainMesh::new(nodes, tris, None).unwrap()
    }

    #[test]
    fn uniform_probability() {
        let m = rect(20.0, 10.0, 4);
        let f = init_probability(&ProbabilityInit::Uniform, &m).unwrap();
        for v in &f.values {
            assert_relative_eq!(*v, 1.0 / 200.0, epsilon = 1e-15);
        }
        assert_relative_eq!(
            integral(
                &m,
                &ScalarField {
                    values: vec![1.0; m.node_count()]
                }
            ),
            200.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn gaussian_normalization() {
        let m = rect(100.0, 100.0, 20);
        let comps = vec![
            GaussianComponent {
                x: 30.0,
                y: 30.0,
                sigma: 10.0,
                weight: 1.0,
            },
            GaussianComponent {
                x: 70.0,
                y: 60.0,
                sigma: 10.0,
                weight: 1.0,
            },
        ];
        let f = init_probability(
            &ProbabilityInit::Gaussians {
                components: comps,
                background: 0.0,
            },
            &m,
        )
        .unwrap();
        assert_relative_eq!(integral(&m, &f), 1.0, epsilon = 1e-9);
        let far = vec![GaussianComponent {
            x: 1e5,
            y: 1e5,
            sigma: 1.0,
            weight: 1.0,
        }];
        let err = init_probability(
            &ProbabilityInit::Gaussians {
                components: far,
                background: 0.0,
            },
            &m,
        );
        assert!(matches!(err, Err(FieldError::Config(_))));
        let neg = ProbabilityInit::Nodal(vec![-1.0; m.node_count()]);
        assert!(matches!(
            init_probability(&neg, &m),
            Err(FieldError::Config(_))
        ));
        let zero = ProbabilityInit::Nodal(vec![0.0; m.node_count()]);
        assert!(matches!(
            init_probability(&zero, &m),
            Err(FieldError::Config(_))
        ));
    }

    #[test]
    fn coverage_accumulation() {
        let mut c = ScalarField::zeros(4);
        accumulate_coverage(&mut c, &[], 1.0).unwrap();
        assert_eq!(c.values, vec![0.0; 4]);
        accumulate_coverage(&mut c, &[(2, 0.4)], 1.0).unwrap();
        assert_relative_eq!(c.values[2], 0.4);
        accumulate_coverage(&mut c, &[(1, 0.1), (1, 0.3)], 2.0).unwrap();
        assert_relative_eq!(c.values[1], 0.8);
        assert!(matches!(
            accumulate_coverage(&mut c, &[(0, -0.1)], 1.0),
            Err(FieldError::Internal(_))
        ));
    }

    #[test]
    fn probability_and_eta() {
        let m = rect(10.0, 10.0, 5);
        let m0 = init_probability(&ProbabilityInit::Uniform, &m).unwrap();
        let zero = ScalarField::zeros(m.node_count());
        assert_eq!(undetected_probability(&m0, &zero), m0);
        assert_relative_eq!(survey_accomplishment(&m, &m0), 0.0, epsilon = 1e-12);
        let half = ScalarField {
            values: vec![std::f64::consts::LN_2; m.node_count()],
        };
        let mm = undetected_probability(&m0, &half);
        assert_relative_eq!(mm.values[3], m0.values[3] / 2.0, epsilon = 1e-15);
        assert_relative_eq!(survey_accomplishment(&m, &mm), 0.5, epsilon = 1e-12);
        let huge = ScalarField {
            values: vec![50.0; m.node_count()],
        };
        assert!(survey_accomplishment(&m, &undetected_probability(&m0, &huge)) > 1.0 - 1e-15);
    }

    #[test]
    fn constant_source() {
        let m = rect(300.0, 200.0, 12);
        let params = HedacParams {
            alpha: 1000.0,
            beta: 0.1,
        };
        let solver = PotentialSolver::new(&m, params).unwrap();
        let u = solver
            .solve(&ScalarField {
                values: vec![2.5; m.node_count()],
            })
            .unwrap();
        for v in &u.values {
            assert_relative_eq!(*v, 25.0, max_relative = 1e-9);
        }
        let u0 = solver.solve(&ScalarField::zeros(m.node_count())).unwrap();
        assert!(u0.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_in_source() {
        let m = rect(100.0, 100.0, 10);
        let solver = PotentialSolver::new(
            &m,
            HedacParams {
                alpha: 50.0,
                beta: 0.4,
            },
        )
        .unwrap();
        let m1: Vec<f64> = m
            .points()
            .iter()
            .map(|p| (p.x / 30.0).sin().abs())
            .collect();
        let m2: Vec<f64> = m.points().iter().map(|p| p.y / 100.0).collect();
        let mix: Vec<f64> = m1.iter().zip(&m2).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let u1 = solver.solve(&ScalarField { values: m1 }).unwrap();
        let u2 = solver.solve(&ScalarField { values: m2 }).unwrap();
        let um = solver.solve(&ScalarField { values: mix }).unwrap();
        let scale = um.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..m.node_count() {
            assert!(
                (um.values[i] - (2.0 * u1.values[i] - 3.0 * u2.values[i])).abs() <= 1e-9 * scale
            );
        }
    }

    #[test]
    fn positive_for_nonnegative_source() {
        let m = rect(100.0, 100.0, 10);
        let solver = PotentialSolver::new(
            &m,
            HedacParams {
                alpha: 500.0,
                beta: 0.1,
            },
        )
        .unwrap();
        let mut src = vec![0.0; m.node_count()];
        src[7] = 1.0;
        let u = solver.solve(&ScalarField { values: src }).unwrap();
        let max = u.values.iter().cloned().fold(0.0, f64::max);
        assert!(u.values.iter().all(|v| *v >= -1e-10 * max));
    }

    #[test]
    fn gradient_directions() {
        let m = rect(10.0, 10.0, 4);
        let ux = ScalarField {
            values: m.points().iter().map(|p| p.x).collect(),
        };
        let g = gradient_direction(&m, &ux, Point2::new(3.3, 4.1))
            .unwrap()
            .unwrap();
        assert_relative_eq!(g.x, 1.0, epsilon = 1e-12);
        let uxy = ScalarField {
            values: m.points().iter().map(|p| p.x + p.y).collect(),
        };
        let g = gradient_direction(&m, &uxy, Point2::new(7.0, 1.0))
            .unwrap()
            .unwrap();
        assert_relative_eq!(g.x, 0.5f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(g.y, 0.5f64.sqrt(), epsilon = 1e-12);
        let flat = ScalarField {
            values: vec![3.0; m.node_count()],
        };
        assert!(gradient_direction(&m, &flat, Point2::new(5.0, 5.0))
            .unwrap()
            .is_none());
        assert!(gradient_direction(&m, &flat, Point2::new(50.0, 5.0)).is_err());
    }
}
