//! Uniform-grid spatial hashing over R^d.

use std::collections::HashMap;

pub(crate) struct SpatialGrid {
    cell: f64,
    d: usize,
    cells: HashMap<Vec<i64>, Vec<u32>>,
}

impl SpatialGrid {
    /// Buckets the row-major `points` (dimension `d`) into cubes of side `cell`.
    pub fn new(points: &[f64], d: usize, cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite());
        let mut cells: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        for (i, x) in points.chunks_exact(d).enumerate() {
            cells.entry(key(x, cell)).or_default().push(i as u32);
        }
        SpatialGrid { cell, d, cells }
    }

    /// Calls `visit` on every stored index whose cell meets the cube of
    /// half-width `radius` around `x`. Indices arrive grouped by cell, each
    /// group ascending; callers that need a global order must sort.
    pub fn for_each_candidate<F: FnMut(u32)>(&self, x: &[f64], radius: f64, mut visit: F) {
        let lo: Vec<i64> = x.iter().map(|v| ((v - radius) / self.cell).floor() as i64).collect();
        let hi: Vec<i64> = x.iter().map(|v| ((v + radius) / self.cell).floor() as i64).collect();
        let mut cur = lo.clone();
        loop {
            if let Some(bucket) = self.cells.get(&cur) {
                bucket.iter().for_each(|&j| visit(j));
            }
            let mut i = 0;
            while i < self.d {
                cur[i] += 1;
                if cur[i] > hi[i] {
                    cur[i] = lo[i];
                    i += 1;
                } else {
                    break;
                }
            }
            if i == self.d {
                break;
            }
        }
    }

    /// Nearest stored point to `x` under Euclidean distance; ties go to the
    /// lowest index.
    pub fn nearest(&self, points: &[f64], x: &[f64]) -> Option<(u32, f64)> {
        if self.cells.is_empty() {
            return None;
        }
        let mut radius = self.cell;
        loop {
            let mut best: Option<(u32, f64)> = None;
            self.for_each_candidate(x, radius, |j| {
                let y = &points[j as usize * self.d..(j as usize + 1) * self.d];
                let dist = crate::geometry::euclidean(x, y);
                best = match best {
                    Some((bj, bd)) if bd < dist || (bd == dist && bj < j) => Some((bj, bd)),
                    _ => Some((j, dist)),
                };
            });
            if let Some((_, bd)) = best {
                // every point within `radius` of x was visited
                if bd <= radius {
                    return best;
                }
            }
            radius *= 2.0;
        }
    }
}

fn key(x: &[f64], cell: f64) -> Vec<i64> {
    x.iter().map(|v| (v / cell).floor() as i64).collect()
}
