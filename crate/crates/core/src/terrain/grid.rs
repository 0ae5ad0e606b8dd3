use nalgebra::Point2;

/// Uniform background grid mapping cells to ascending lists of item ids.
#[derive(Debug, Clone)]
pub(crate) struct BucketGrid {
    origin: Point2<f64>,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

const MAX_CELLS_PER_AXIS: usize = 1024;

impl BucketGrid {
    pub fn new(min: Point2<f64>, max: Point2<f64>, cell_hint: f64) -> Self {
        let w = (max.x - min.x).max(1e-9);
        let h = (max.y - min.y).max(1e-9);
        let mut cell = if cell_hint.is_finite() && cell_hint > 0.0 {
            cell_hint
        } else {
            w.max(h)
        };
        cell = cell.max(w.max(h) / MAX_CELLS_PER_AXIS as f64);
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((h / cell).ceil() as usize).max(1);
        Self {
            origin: min,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        }
    }

    fn clamp_ix(&self, v: f64, n: usize) -> usize {
        if v <= 0.0 {
            0
        } else {
            (v as usize).min(n - 1)
        }
    }

    fn range(&self, min: Point2<f64>, max: Point2<f64>) -> (usize, usize, usize, usize) {
        let i0 = self.clamp_ix((min.x - self.origin.x) / self.cell, self.nx);
        let i1 = self.clamp_ix((max.x - self.origin.x) / self.cell, self.nx);
        let j0 = self.clamp_ix((min.y - self.origin.y) / self.cell, self.ny);
        let j1 = self.clamp_ix((max.y - self.origin.y) / self.cell, self.ny);
        (i0, i1, j0, j1)
    }

    /// Items must be inserted in ascending id order.
    pub fn insert_box(&mut self, id: usize, min: Point2<f64>, max: Point2<f64>) {
        let (i0, i1, j0, j1) = self.range(min, max);
        for j in j0..=j1 {
            for i in i0..=i1 {
                self.buckets[j * self.nx + i].push(id as u32);
            }
        }
    }

    pub fn at(&self, p: Point2<f64>) -> &[u32] {
        let (i, _, j, _) = self.range(p, p);
        &self.buckets[j * self.nx + i]
    }

    /// Visits every bucket overlapping the box; an id may be visited more than once.
    pub fn for_each_in_box(&self, min: Point2<f64>, max: Point2<f64>, mut f: impl FnMut(usize)) {
        let (i0, i1, j0, j1) = self.range(min, max);
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &id in &self.buckets[j * self.nx + i] {
                    f(id as usize);
                }
            }
        }
    }

    /// Visits buckets in square rings of growing Chebyshev radius around `p`.
    /// `f` receives each id and the ring radius; it returns the search radius
    /// (in metres) still of interest, and iteration stops once rings lie beyond it.
    pub fn ring_search(&self, p: Point2<f64>, mut f: impl FnMut(usize) -> f64) {
        let (ci, _, cj, _) = self.range(p, p);
        let max_ring = self.nx.max(self.ny);
        let mut radius = f64::INFINITY;
        for ring in 0..=max_ring {
            // every cell in this ring is at least (ring-1)*cell away from p
            if ring >= 1 && (ring as f64 - 1.0) * self.cell > radius {
                break;
            }
            let (ci, cj, r) = (ci as isize, cj as isize, ring as isize);
            for j in (cj - r)..=(cj + r) {
                if j < 0 || j >= self.ny as isize {
                    continue;
                }
                for i in (ci - r)..=(ci + r) {
                    if i < 0 || i >= self.nx as isize {
                        continue;
                    }
                    if (j - cj).abs() != r && (i - ci).abs() != r {
                        continue;
                    }
                    for &id in &self.buckets[j as usize * self.nx + i as usize] {
                        radius = radius.min(f(id as usize));
                    }
                }
            }
        }
    }
}
