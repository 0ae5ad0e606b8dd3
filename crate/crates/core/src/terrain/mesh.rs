use std::collections::HashMap;

use nalgebra::{Point2, Vector2};

use super::grid::BucketGrid;
use super::TerrainError;
use crate::geometry::{cross, point_segment_distance};

/// Barycentric slack when testing point-in-triangle.
const INSIDE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopKind {
    Outer,
    Hole,
}

/// Closed boundary loop; edge `k` joins `nodes[k]` and `nodes[(k + 1) % len]`.
/// Loops are oriented with the domain on their left.
#[derive(Debug, Clone)]
pub struct BoundaryLoop {
    pub kind: LoopKind,
    pub nodes: Vec<usize>,
}

/// Boundary line element as read from a mesh file.
#[derive(Debug, Clone, Copy)]
pub struct TaggedEdge {
    pub a: usize,
    pub b: usize,
    pub kind: LoopKind,
}

/// Triangulated search domain with per-node terrain elevation.
#[derive(Debug, Clone)]
pub struct TerrainMesh {
    points: Vec<Point2<f64>>,
    elevation: Vec<f64>,
    triangles: Vec<[usize; 3]>,
    loops: Vec<BoundaryLoop>,
    boundary_edges: Vec<[usize; 2]>,
    node_area: Vec<f64>,
    area: f64,
    z_range: (f64, f64),
    bbox: (Point2<f64>, Point2<f64>),
    tri_grid: BucketGrid,
    node_grid: BucketGrid,
    edge_grid: BucketGrid,
}

fn invalid(entity: impl Into<String>, message: impl Into<String>) -> TerrainError {
    TerrainError::Validation {
        entity: entity.into(),
        message: message.into(),
    }
}

impl TerrainMesh {
    /// Builds and validates a mesh. Triangles are reoriented counterclockwise.
    /// Without `lines`, loops are classified from orientation: counterclockwise
    /// loops bound the outside, clockwise ones are holes.
    pub fn new(
        nodes: Vec<[f64; 3]>,
        mut triangles: Vec<[usize; 3]>,
        lines: Option<Vec<TaggedEdge>>,
    ) -> Result<Self, TerrainError> {
        let n = nodes.len();
        if triangles.is_empty() {
            return Err(invalid("mesh", "no triangle elements"));
        }
        for (i, node) in nodes.iter().enumerate() {
            if node.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("node {i}"), "non-finite coordinate"));
            }
        }
        let points: Vec<Point2<f64>> = nodes.iter().map(|p| Point2::new(p[0], p[1])).collect();
        let elevation: Vec<f64> = nodes.iter().map(|p| p[2]).collect();

        let mut node_area = vec![0.0; n];
        let mut area = 0.0;
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= n {
                    return Err(invalid(
                        format!("triangle {t}"),
                        format!("references node {v} but the mesh has {n} nodes"),
                    ));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(invalid(format!("triangle {t}"), "repeats a node"));
            }
            let a2 = cross(
                points[tri[1]] - points[tri[0]],
                points[tri[2]] - points[tri[0]],
            );
            let scale = (points[tri[1]] - points[tri[0]])
                .norm()
                .max((points[tri[2]] - points[tri[0]]).norm());
            if a2.abs() <= 1e-12 * scale * scale {
                return Err(invalid(format!("triangle {t}"), "has zero area"));
            }
            if a2 < 0.0 {
                tri.swap(1, 2);
            }
            let at = 0.5 * a2.abs();
            area += at;
            for &v in tri.iter() {
                node_area[v] += at / 3.0;
            }
        }

        // directed edge (a, b) of a CCW triangle -> (count of undirected uses)
        let mut uses: HashMap<(usize, usize), (u32, (usize, usize))> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let e = uses.entry((a.min(b), a.max(b))).or_insert((0, (a, b)));
                e.0 += 1;
                if e.0 > 2 {
                    return Err(invalid(
                        format!("edge ({a}, {b})"),
                        "is shared by more than two triangles",
                    ));
                }
            }
        }
        let mut directed: Vec<(usize, usize)> = uses
            .values()
            .filter(|(c, _)| *c == 1)
            .map(|(_, e)| *e)
            .collect();
        directed.sort_unstable();

        let mut next: HashMap<usize, usize> = HashMap::with_capacity(directed.len());
        let mut incoming: HashMap<usize, u32> = HashMap::with_capacity(directed.len());
        for &(a, b) in &directed {
            if next.insert(a, b).is_some() {
                return Err(invalid(
                    format!("boundary node {a}"),
                    "touches more than two boundary edges",
                ));
            }
            *incoming.entry(b).or_default() += 1;
        }
        for (&v, &c) in &incoming {
            if c != 1 || !next.contains_key(&v) {
                return Err(invalid(
                    format!("boundary node {v}"),
                    "does not have exactly two boundary edges",
                ));
            }
        }

        let mut loops = Vec::new();
        let mut visited: HashMap<usize, bool> = HashMap::new();
        for &(start, _) in &directed {
            if visited.contains_key(&start) {
                continue;
            }
            let mut nodes_loop = vec![start];
            visited.insert(start, true);
            let mut cur = next[&start];
            while cur != start {
                if visited.insert(cur, true).is_some() {
                    return Err(invalid(
                        format!("boundary node {cur}"),
                        "boundary loop is not closed",
                    ));
                }
                nodes_loop.push(cur);
                cur = next[&cur];
            }
            let signed: f64 = (0..nodes_loop.len())
                .map(|k| {
                    let p = points[nodes_loop[k]];
                    let q = points[nodes_loop[(k + 1) % nodes_loop.len()]];
                    p.x * q.y - q.x * p.y
                })
                .sum();
            let kind = if signed > 0.0 {
                LoopKind::Outer
            } else {
                LoopKind::Hole
            };
            loops.push(BoundaryLoop {
                kind,
                nodes: nodes_loop,
            });
        }

        if let Some(lines) = lines {
            let mut tagged: HashMap<(usize, usize), LoopKind> = HashMap::new();
            for (i, e) in lines.iter().enumerate() {
                if e.a >= n || e.b >= n {
                    return Err(invalid(
                        format!("line element {i}"),
                        format!("references a node outside 0..{n}"),
                    ));
                }
                let key = (e.a.min(e.b), e.a.max(e.b));
                if uses.get(&key).map(|u| u.0) != Some(1) {
                    return Err(invalid(
                        format!("line element ({}, {})", e.a, e.b),
                        "is not a boundary edge of the triangulation",
                    ));
                }
                tagged.insert(key, e.kind);
            }
            for lp in &mut loops {
                let m = lp.nodes.len();
                let mut kinds = (0..m).map(|k| {
                    let (a, b) = (lp.nodes[k], lp.nodes[(k + 1) % m]);
                    tagged.get(&(a.min(b), a.max(b))).copied().ok_or((a, b))
                });
                let first = kinds.next().unwrap().map_err(|(a, b)| {
                    invalid(format!("boundary edge ({a}, {b})"), "has no line element")
                })?;
                for k in kinds {
                    let k = k.map_err(|(a, b)| {
                        invalid(format!("boundary edge ({a}, {b})"), "has no line element")
                    })?;
                    if k != first {
                        return Err(invalid(
                            format!("boundary loop through node {}", lp.nodes[0]),
                            "mixes outer and hole tags",
                        ));
                    }
                }
                if first != lp.kind {
                    return Err(invalid(
                        format!("boundary loop through node {}", lp.nodes[0]),
                        format!(
                            "is tagged {first:?} but its orientation makes it {:?}",
                            lp.kind
                        ),
                    ));
                }
            }
        }
        if !loops.iter().any(|l| l.kind == LoopKind::Outer) {
            return Err(invalid("mesh", "no outer boundary loop"));
        }

        let boundary_edges: Vec<[usize; 2]> = loops
            .iter()
            .flat_map(|l| {
                let m = l.nodes.len();
                (0..m).map(move |k| [l.nodes[k], l.nodes[(k + 1) % m]])
            })
            .collect();

        let mut min = points[0];
        let mut max = points[0];
        for p in &points {
            min = Point2::new(min.x.min(p.x), min.y.min(p.y));
            max = Point2::new(max.x.max(p.x), max.y.max(p.y));
        }
        let z_range = elevation
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &z| {
                (lo.min(z), hi.max(z))
            });
        let cell = 2.0 * (area / triangles.len() as f64).sqrt();
        let mut tri_grid = BucketGrid::new(min, max, cell);
        for (t, tri) in triangles.iter().enumerate() {
            let (lo, hi) = bounds(tri.iter().map(|&v| points[v]));
            tri_grid.insert_box(t, lo, hi);
        }
        let mut node_grid = BucketGrid::new(min, max, cell);
        for (i, p) in points.iter().enumerate() {
            node_grid.insert_box(i, *p, *p);
        }
        let mut edge_grid = BucketGrid::new(min, max, cell);
        for (e, [a, b]) in boundary_edges.iter().enumerate() {
            let (lo, hi) = bounds([points[*a], points[*b]].into_iter());
            edge_grid.insert_box(e, lo, hi);
        }

        Ok(Self {
            points,
            elevation,
            triangles,
            loops,
            boundary_edges,
            node_area,
            area,
            z_range,
            bbox: (min, max),
            tri_grid,
            node_grid,
            edge_grid,
        })
    }

    pub fn node_count(&self) -> usize {
        self.points.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn points(&self) -> &[Point2<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Point2<f64> {
        self.points[i]
    }

    pub fn elevations(&self) -> &[f64] {
        &self.elevation
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn loops(&self) -> &[BoundaryLoop] {
        &self.loops
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    /// Lumped nodal weights; `Σ w_i f_i` is the linear-FEM integral of `f`.
    pub fn node_weights(&self) -> &[f64] {
        &self.node_area
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Lowest and highest nodal elevation.
    pub fn elevation_range(&self) -> (f64, f64) {
        self.z_range
    }

    pub fn bounding_box(&self) -> (Point2<f64>, Point2<f64>) {
        self.bbox
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * cross(
            self.points[b] - self.points[a],
            self.points[c] - self.points[a],
        )
    }

    /// Containing triangle and barycentric weights; on shared edges the lowest
    /// triangle index wins.
    pub fn locate(&self, p: Point2<f64>) -> Option<(usize, [f64; 3])> {
        let (lo, hi) = self.bbox;
        let pad = 1e-9 * (hi - lo).norm().max(1.0);
        if p.x < lo.x - pad || p.y < lo.y - pad || p.x > hi.x + pad || p.y > hi.y + pad {
            return None;
        }
        for &t in self.tri_grid.at(p) {
            let t = t as usize;
            let l = self.barycentric(t, p);
            if l.iter().all(|&v| v >= -INSIDE_TOL) {
                return Some((t, l));
            }
        }
        None
    }

    pub fn barycentric(&self, t: usize, p: Point2<f64>) -> [f64; 3] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.points[a], self.points[b], self.points[c]);
        let a2 = cross(pb - pa, pc - pa);
        [
            cross(pb - p, pc - p) / a2,
            cross(pc - p, pa - p) / a2,
            cross(pa - p, pb - p) / a2,
        ]
    }

    pub fn contains(&self, p: Point2<f64>) -> bool {
        self.locate(p).is_some()
    }

    /// Linear interpolation of a nodal field at `p`.
    pub fn interpolate(&self, values: &[f64], p: Point2<f64>) -> Result<f64, TerrainError> {
        let (t, l) = self
            .locate(p)
            .ok_or(TerrainError::OutsideDomain { x: p.x, y: p.y })?;
        let tri = self.triangles[t];
        Ok(l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]])
    }

    pub fn elevation_at(&self, p: Point2<f64>) -> Result<f64, TerrainError> {
        self.interpolate(&self.elevation, p)
    }

    /// Constant gradient of the linear interpolant of `values` on triangle `t`.
    pub fn triangle_gradient(&self, t: usize, values: &[f64]) -> Vector2<f64> {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.points[a], self.points[b], self.points[c]);
        let a2 = cross(pb - pa, pc - pa);
        let (fa, fb, fc) = (values[a], values[b], values[c]);
        // ∇f = Σ f_i ∇λ_i, ∇λ_i = perp(opposite edge) / 2A
        let gx = fa * (pb.y - pc.y) + fb * (pc.y - pa.y) + fc * (pa.y - pb.y);
        let gy = fa * (pc.x - pb.x) + fb * (pa.x - pc.x) + fc * (pb.x - pa.x);
        Vector2::new(gx, gy) / a2
    }

    pub fn nearest_node(&self, p: Point2<f64>) -> usize {
        let mut best = (f64::INFINITY, 0usize);
        self.node_grid.ring_search(p, |i| {
            let d = (self.points[i] - p).norm();
            if d < best.0 || (d == best.0 && i < best.1) {
                best = (d, i);
            }
            best.0
        });
        best.1
    }

    /// Calls `f` once for every node inside the closed axis-aligned box.
    pub fn for_each_node_in_box(
        &self,
        min: Point2<f64>,
        max: Point2<f64>,
        mut f: impl FnMut(usize),
    ) {
        self.node_grid.for_each_in_box(min, max, |i| {
            let q = self.points[i];
            if q.x >= min.x && q.x <= max.x && q.y >= min.y && q.y <= max.y {
                f(i);
            }
        });
    }

    /// Distance from `p` to the nearest boundary edge (outer or hole).
    pub fn boundary_distance(&self, p: Point2<f64>) -> f64 {
        let mut best = f64::INFINITY;
        self.edge_grid.ring_search(p, |e| {
            let [a, b] = self.boundary_edges[e];
            best = best.min(point_segment_distance(p, self.points[a], self.points[b]));
            best
        });
        best
    }

    /// True if some boundary edge passes within `r` of `p`.
    pub fn boundary_within(&self, p: Point2<f64>, r: f64) -> bool {
        let d = Vector2::new(r, r);
        let mut hit = false;
        self.edge_grid.for_each_in_box(p - d, p + d, |e| {
            if !hit {
                let [a, b] = self.boundary_edges[e];
                hit = point_segment_distance(p, self.points[a], self.points[b]) < r;
            }
        });
        hit
    }

    /// A disk of radius `r` around `p` that lies in the domain with at least
    /// `margin` to every boundary edge.
    pub fn disk_clear(&self, p: Point2<f64>, r: f64, margin: f64) -> bool {
        self.contains(p) && !self.boundary_within(p, r + margin)
    }
}

fn bounds(mut it: impl Iterator<Item = Point2<f64>>) -> (Point2<f64>, Point2<f64>) {
    let first = it.next().expect("non-empty");
    it.fold((first, first), |(lo, hi), p| {
        (
            Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
            Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
        )
    })
}
