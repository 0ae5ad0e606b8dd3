//! Structured triangulations of analytic terrains, used by the scripted
//! scenarios, tests and benchmarks.

use crate::terrain::TerrainMesh;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x > self.x0 && x < self.x1 && y > self.y0 && y < self.y1
    }
}

/// Rectangle `[x0, x0 + w] × [y0, y0 + h]` split into `nx × ny` cells, two
/// triangles per cell with alternating diagonals. Cells whose centre lies
/// in a hole are dropped, along with nodes no triangle uses.
pub fn grid_mesh(
    origin: (f64, f64),
    size: (f64, f64),
    cells: (usize, usize),
    height: impl Fn(f64, f64) -> f64,
    holes: &[Rect],
) -> TerrainMesh {
    let (nx, ny) = cells;
    let hx = size.0 / nx as f64;
    let hy = size.1 / ny as f64;
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let cx = origin.0 + (i as f64 + 0.5) * hx;
            let cy = origin.1 + (j as f64 + 0.5) * hy;
            if holes.iter().any(|h| h.contains(cx, cy)) {
                continue;
            }
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            } else {
                tris.push([a, b, d]);
                tris.push([b, c, d]);
            }
        }
    }
    let mut used = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut nodes = Vec::new();
    for t in &mut tris {
        for v in t.iter_mut() {
            if used[*v] == usize::MAX {
                used[*v] = nodes.len();
                let x = origin.0 + (*v % (nx + 1)) as f64 * hx;
                let y = origin.1 + (*v / (nx + 1)) as f64 * hy;
                nodes.push([x, y, height(x, y)]);
            }
            *v = used[*v];
        }
    }
    TerrainMesh::new(nodes, tris, None).expect("structured grid is a valid mesh")
}

/// Smooth bump of height `h` and radius `r` with zero slope at its rim.
pub fn bump(x: f64, y: f64, cx: f64, cy: f64, r: f64, h: f64) -> f64 {
    let d2 = ((x - cx).powi(2) + (y - cy).powi(2)) / (r * r);
    if d2 >= 1.0 {
        0.0
    } else {
        h * (1.0 - d2).powi(2)
    }
}

/// Exaggerated hills, ridges and valleys over an 850 m square.
pub fn rugged_height(x: f64, y: f64) -> f64 {
    let ridge = 60.0 * (x / 95.0).sin() * (y / 130.0).cos();
    let valley = -45.0 * (-((x - 0.55 * y - 120.0) / 70.0).powi(2)).exp();
    120.0
        + ridge
        + valley
        + bump(x, y, 200.0, 620.0, 170.0, 140.0)
        + bump(x, y, 640.0, 250.0, 150.0, 110.0)
        + bump(x, y, 560.0, 690.0, 110.0, 80.0)
        + 12.0 * ((x + 2.0 * y) / 40.0).sin()
}

/// Star-dune field: overlapping broad mounds with radiating arms.
pub fn dunes_height(x: f64, y: f64) -> f64 {
    let centres = [
        (500.0, 600.0, 420.0, 95.0),
        (1700.0, 500.0, 480.0, 120.0),
        (2300.0, 1800.0, 450.0, 110.0),
        (900.0, 2000.0, 500.0, 105.0),
        (1500.0, 1300.0, 380.0, 85.0),
    ];
    let mut z = 300.0 + 8.0 * (x / 260.0).sin() * (y / 310.0).cos();
    for &(cx, cy, r, h) in &centres {
        let a = (y - cy).atan2(x - cx);
        let arms = 1.0 + 0.25 * (3.0 * a).cos();
        z += bump(x, y, cx, cy, r * arms, h);
    }
    z
}

/// Volcanic cone with a summit crater, centred in a 2.73 km square.
pub fn crater_height(x: f64, y: f64) -> f64 {
    let (cx, cy) = (1364.0, 1364.0);
    let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
    let cone = 600.0 * (-(r / 620.0).powi(2)).exp();
    let crater = -220.0 * (-(r / 200.0).powi(4)).exp();
    let gully = 15.0 * ((y - cy).atan2(x - cx) * 7.0).sin() * (r / 900.0).min(1.0);
    200.0 + cone + crater + gully
}
