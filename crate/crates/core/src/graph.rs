//! Kernel-weighted h-neighborhood graphs in compressed row form.

use std::io::{BufWriter, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclidean, PointCloud};
use crate::grid::SpatialGrid;
use crate::kernel::KernelSpec;

pub const CSR_MAGIC: &[u8; 4] = b"MSCR";

/// Above this ambient dimension grid hashing scans too many cells.
const GRID_MAX_DIM: usize = 6;
const ALL_PAIRS_MAX_N: usize = 20_000;

/// Symmetric sparse weights `w_ij = η(|x_i - x_j|/h) / (n h^m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    pub n: usize,
    pub h: f64,
    pub kernel: KernelSpec,
    pub self_loops: bool,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    pub warnings: Vec<String>,
}

impl WeightedGraph {
    /// Builds a graph from explicit symmetric triplets. Each unordered pair
    /// `(i, j)` with `i <= j` must appear once.
    pub fn from_pairs(
        n: usize,
        h: f64,
        kernel: KernelSpec,
        pairs: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in pairs {
            if i >= n || j >= n {
                return Err(Error::arg(format!("pair ({i}, {j}) out of range for n = {n}")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::arg(format!("weight {w} on ({i}, {j}) is not finite and >= 0")));
            }
            rows[i].push((j as u32, w));
            if i != j {
                rows[j].push((i as u32, w));
            }
        }
        let self_loops = pairs.iter().any(|p| p.0 == p.1);
        for row in rows.iter_mut() {
            row.sort_by_key(|e| e.0);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::arg("duplicate pair in graph input"));
            }
        }
        Ok(Self::from_rows(n, h, kernel, self_loops, rows))
    }

    fn from_rows(
        n: usize,
        h: f64,
        kernel: KernelSpec,
        self_loops: bool,
        rows: Vec<Vec<(u32, f64)>>,
    ) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for row in rows {
            for (j, w) in row {
                cols.push(j);
                vals.push(w);
            }
            row_ptr.push(cols.len());
        }
        let mut g = WeightedGraph {
            n,
            h,
            kernel,
            self_loops,
            row_ptr,
            cols,
            vals,
            warnings: Vec::new(),
        };
        if g.vals.iter().all(|&w| w == 0.0) {
            g.warnings
                .push("graph has no edges: every pair is farther than h and eta(0) contributes nothing".into());
        }
        g
    }

    /// Stored entries, counting both orientations of every off-diagonal pair.
    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Column indices and weights of row `i`, columns strictly increasing.
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&(j as u32)).map(|p| v[p]).unwrap_or(0.0)
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// Connected components as a label per vertex, labels in order of first vertex.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let mut label = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            stack.push(s);
            while let Some(i) = stack.pop() {
                let (c, v) = self.row(i);
                for (&j, &w) in c.iter().zip(v) {
                    let j = j as usize;
                    if w > 0.0 && label[j] == usize::MAX {
                        label[j] = count;
                        stack.push(j);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }

    /// Writes `i j w` triplets, one per line, sorted by row then column.
    pub fn write_triplets<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &w) in c.iter().zip(v) {
                writeln!(out, "{i} {j} {w:e}")?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Binary CSR dump: magic, `n` and `nnz` as u64, row pointers as u64,
    /// column indices as u64, then weights as f64; all little-endian.
    pub fn write_csr<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        out.write_all(CSR_MAGIC)?;
        out.write_all(&(self.n as u64).to_le_bytes())?;
        out.write_all(&(self.nnz() as u64).to_le_bytes())?;
        for &p in &self.row_ptr {
            out.write_all(&(p as u64).to_le_bytes())?;
        }
        for &c in &self.cols {
            out.write_all(&(c as u64).to_le_bytes())?;
        }
        for &w in &self.vals {
            out.write_all(&w.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Builds the h-neighborhood graph with self-loops retained.
pub fn build_graph(cloud: &PointCloud, h: f64, kernel: &KernelSpec) -> Result<WeightedGraph> {
    build_graph_with(cloud, h, kernel, true)
}

pub fn build_graph_with(
    cloud: &PointCloud,
    h: f64,
    kernel: &KernelSpec,
    self_loops: bool,
) -> Result<WeightedGraph> {
    check(cloud, h, kernel)?;
    let d = cloud.dim();
    if d > GRID_MAX_DIM {
        if cloud.len() > ALL_PAIRS_MAX_N {
            return Err(Error::Unsupported(format!(
                "ambient dimension {d} needs the all-pairs builder, limited to n <= {ALL_PAIRS_MAX_N}"
            )));
        }
        return build_graph_all_pairs(cloud, h, kernel, self_loops);
    }
    let grid = SpatialGrid::new(cloud.coords(), d, h);
    let upper: Vec<Vec<(u32, f64)>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let x = cloud.point(i);
            let mut row = Vec::new();
            grid.for_each_candidate(x, h, |j| {
                if j as usize > i {
                    if let Some(w) = pair_weight(cloud, h, kernel, x, j as usize) {
                        row.push((j, w));
                    }
                }
            });
            row.sort_by_key(|e| e.0);
            row
        })
        .collect();
    Ok(assemble(cloud.len(), h, kernel, self_loops, upper))
}

/// O(n²) reference construction.
pub fn build_graph_all_pairs(
    cloud: &PointCloud,
    h: f64,
    kernel: &KernelSpec,
    self_loops: bool,
) -> Result<WeightedGraph> {
    check(cloud, h, kernel)?;
    let n = cloud.len();
    let upper: Vec<Vec<(u32, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = cloud.point(i);
            (i + 1..n)
                .filter_map(|j| pair_weight(cloud, h, kernel, x, j).map(|w| (j as u32, w)))
                .collect()
        })
        .collect();
    Ok(assemble(n, h, kernel, self_loops, upper))
}

/// Weight-degree vector `m_i = Σ_j w_ij`, self-loop included.
pub fn degrees(graph: &WeightedGraph) -> Vec<f64> {
    (0..graph.n)
        .into_par_iter()
        .map(|i| graph.row(i).1.iter().sum())
        .collect()
}

fn check(cloud: &PointCloud, h: f64, kernel: &KernelSpec) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::arg(format!("bandwidth must be positive, got {h}")));
    }
    if kernel.m != cloud.manifold.m {
        return Err(Error::arg(format!(
            "kernel normalized for m = {} but the manifold has m = {}",
            kernel.m, cloud.manifold.m
        )));
    }
    Ok(())
}

fn pair_weight(cloud: &PointCloud, h: f64, kernel: &KernelSpec, x: &[f64], j: usize) -> Option<f64> {
    let dist = euclidean(x, cloud.point(j));
    if dist > h {
        return None;
    }
    let w = kernel.eta(dist / h) / (cloud.len() as f64 * h.powi(kernel.m as i32));
    (w > 0.0).then_some(w)
}

/// Mirrors the strictly-upper rows into full symmetric rows. Lower entries of
/// row i arrive in ascending source order, so every row stays sorted.
fn assemble(
    n: usize,
    h: f64,
    kernel: &KernelSpec,
    self_loops: bool,
    upper: Vec<Vec<(u32, f64)>>,
) -> WeightedGraph {
    let diag = kernel.eta(0.0) / (n as f64 * h.powi(kernel.m as i32));
    let mut lower: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for (i, row) in upper.iter().enumerate() {
        for &(j, w) in row {
            lower[j as usize].push((i as u32, w));
        }
    }
    let rows = lower
        .into_iter()
        .zip(upper)
        .enumerate()
        .map(|(i, (mut row, up))| {
            if self_loops && diag > 0.0 {
                row.push((i as u32, diag));
            }
            row.extend(up);
            row
        })
        .collect();
    WeightedGraph::from_rows(n, h, kernel.clone(), self_loops, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample, DensitySpec, ManifoldSpec};
    use crate::kernel::{make_kernel, KernelProfile};
    use std::f64::consts::PI;

    fn two_points(sep: f64) -> PointCloud {
        let s = ManifoldSpec::sphere(2).unwrap();
        let half = sep / 2.0;
        let pts = vec![
            (1.0 - half * half).sqrt(), half, 0.0,
            (1.0 - half * half).sqrt(), -half, 0.0,
        ];
        PointCloud::from_points(s.clone(), DensitySpec::uniform(&s), 0, pts).unwrap()
    }

    #[test]
    fn two_vertex_weights() {
        let k = make_kernel(KernelProfile::Indicator, 2).unwrap();
        let h = 0.2;
        let g = build_graph(&two_points(h / 2.0), h, &k).unwrap();
        let expect = 1.0 / (2.0 * PI * h * h);
        assert!((g.weight(0, 1) - expect).abs() < 1e-12 * expect);
        assert_eq!(g.weight(0, 1), g.weight(1, 0));
        let m = degrees(&g);
        assert!((m[0] - 2.0 * expect).abs() < 1e-12 * expect);

        let far = build_graph(&two_points(2.0 * h), h, &k).unwrap();
        assert_eq!(far.weight(0, 1), 0.0);
        assert!(far.warnings.is_empty());
        let bare = build_graph_with(&two_points(2.0 * h), h, &k, false).unwrap();
        assert_eq!(bare.nnz(), 0);
        assert_eq!(bare.warnings.len(), 1);
    }

    #[test]
    fn grid_matches_all_pairs() {
        let t = ManifoldSpec::torus(2).unwrap();
        for seed in 0..5 {
            let c = sample(&t, &DensitySpec::uniform(&t), 50, seed).unwrap();
            let k = make_kernel(KernelProfile::Bump, 2).unwrap();
            let a = build_graph(&c, 0.07, &k).unwrap();
            let b = build_graph_all_pairs(&c, 0.07, &k, true).unwrap();
            assert_eq!(a, b);
            assert!(a.nnz() > 50);
        }
    }

    #[test]
    fn rows_sorted_and_symmetric() {
        let s = ManifoldSpec::sphere(2).unwrap();
        let c = sample(&s, &DensitySpec::uniform(&s), 300, 3).unwrap();
        let g = build_graph(&c, 0.3, &make_kernel(KernelProfile::Gauss, 2).unwrap()).unwrap();
        for i in 0..g.n {
            let (cols, vals) = g.row(i);
            assert!(cols.windows(2).all(|w| w[0] < w[1]));
            for (&j, &w) in cols.iter().zip(vals) {
                assert_eq!(g.weight(j as usize, i), w);
                assert!(euclidean(c.point(i), c.point(j as usize)) <= 0.3);
            }
        }
    }

    #[test]
    fn csr_round_trip_layout() {
        let k = make_kernel(KernelProfile::Indicator, 2).unwrap();
        let g = build_graph(&two_points(0.05), 0.2, &k).unwrap();
        let mut buf = Vec::new();
        g.write_csr(&mut buf).unwrap();
        assert_eq!(&buf[..4], CSR_MAGIC);
        assert_eq!(buf.len(), 4 + 16 + 8 * 3 + 16 * g.nnz());
        let mut txt = Vec::new();
        g.write_triplets(&mut txt).unwrap();
        let lines: Vec<_> = String::from_utf8(txt).unwrap().lines().map(String::from).collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("0 0 "));
    }
}
