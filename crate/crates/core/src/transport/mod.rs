//! ∞-transport between empirical measures: exact bottleneck matchings,
//! balanced assignments of a quadrature cloud to the data, and Voronoi cells.

mod matching;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclidean, periodic_gap, ManifoldKind, ManifoldSpec, PointCloud};
use crate::grid::SpatialGrid;
use matching::{bottleneck, is_feasible, DenseCosts, ThresholdGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Geodesic,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclid" | "euclidean" => Ok(Metric::Euclidean),
            "geo" | "geodesic" => Ok(Metric::Geodesic),
            _ => Err(Error::arg(format!("unknown metric {s:?}"))),
        }
    }
}

/// A bottleneck-optimal perfect matching: `a[i]` is paired with `b[pairs[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub cost: f64,
    pub pairs: Vec<usize>,
}

/// Balanced assignment of `N` quadrature points onto `n` data points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    /// Data index of every quadrature point.
    #[serde(skip)]
    pub assignment: Vec<usize>,
    pub capacity: usize,
    pub eps_hat: f64,
    pub metric: Metric,
    /// Quadrature indices of each cell `U_i`, ascending.
    pub cells: Vec<Vec<usize>>,
}

impl TransportPlan {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    /// Parses a plan written by [`TransportPlan::write_json`], restoring the assignment.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut plan: TransportPlan = serde_json::from_str(text)?;
        let total: usize = plan.cells.iter().map(Vec::len).sum();
        let mut assignment = vec![usize::MAX; total];
        for (i, cell) in plan.cells.iter().enumerate() {
            for &q in cell {
                if q >= total || assignment[q] != usize::MAX {
                    return Err(Error::Format("cells do not partition the quadrature".into()));
                }
                assignment[q] = i;
            }
        }
        plan.assignment = assignment;
        Ok(plan)
    }
}

/// Nearest-data-point ownership of every quadrature point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiPartition {
    pub owner: Vec<usize>,
    pub n: usize,
}

impl VoronoiPartition {
    /// Number of quadrature points owned by each data point.
    pub fn cell_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n];
        self.owner.iter().for_each(|&o| sizes[o] += 1);
        sizes
    }
}

/// Distances between two clouds on the same manifold, with per-point data
/// precomputed for fast geodesics.
struct PointCosts<'a> {
    left: &'a PointCloud,
    right: &'a PointCloud,
    metric: Metric,
    left_angles: Vec<f64>,
    right_angles: Vec<f64>,
}

impl<'a> PointCosts<'a> {
    fn new(left: &'a PointCloud, right: &'a PointCloud, metric: Metric) -> Self {
        let angles = |c: &PointCloud| -> Vec<f64> {
            if metric == Metric::Geodesic && c.manifold.kind == ManifoldKind::Torus {
                c.iter().flat_map(|x| c.manifold.torus_angles(x)).collect()
            } else {
                Vec::new()
            }
        };
        PointCosts {
            left,
            right,
            metric,
            left_angles: angles(left),
            right_angles: angles(right),
        }
    }

    fn cost(&self, i: usize, j: usize) -> f64 {
        let (x, y) = (self.left.point(i), self.right.point(j));
        let man = &self.left.manifold;
        match (self.metric, man.kind) {
            (Metric::Euclidean, _) => euclidean(x, y),
            (Metric::Geodesic, ManifoldKind::Sphere) => man.geodesic_unchecked(x, y),
            (Metric::Geodesic, ManifoldKind::Torus) => {
                let m = man.m;
                let a = &self.left_angles[i * m..(i + 1) * m];
                let b = &self.right_angles[j * m..(j + 1) * m];
                a.iter()
                    .zip(b)
                    .map(|(s, t)| periodic_gap(s - t).powi(2))
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }
}

impl ThresholdGraph for PointCosts<'_> {
    fn left_len(&self) -> usize {
        self.left.len()
    }

    fn right_len(&self) -> usize {
        self.right.len()
    }

    fn adjacency(&self, t: f64) -> Vec<Vec<(u32, f64)>> {
        // chord <= geodesic, so an ambient ball of radius t is a superset
        let grid = SpatialGrid::new(self.right.coords(), self.right.dim(), t.max(1e-9));
        (0..self.left.len())
            .into_par_iter()
            .map(|i| {
                let mut row = Vec::new();
                grid.for_each_candidate(self.left.point(i), t, |j| {
                    let c = self.cost(i, j as usize);
                    if c <= t {
                        row.push((j, c));
                    }
                });
                row.sort_by_key(|e| e.0);
                row
            })
            .collect()
    }

    fn initial_guess(&self) -> f64 {
        let man = &self.right.manifold;
        0.5 * (man.volume / self.right.len() as f64).powf(1.0 / man.m as f64)
    }
}

fn same_manifold(a: &PointCloud, b: &PointCloud) -> Result<()> {
    if a.manifold != b.manifold {
        return Err(Error::arg("point clouds live on different manifolds"));
    }
    Ok(())
}

/// Exact bottleneck matching between two equal-size clouds.
pub fn bottleneck_match(a: &PointCloud, b: &PointCloud, metric: Metric) -> Result<Matching> {
    same_manifold(a, b)?;
    if a.len() != b.len() {
        return Err(Error::arg(format!("set sizes differ: {} vs {}", a.len(), b.len())));
    }
    let costs = PointCosts::new(a, b, metric);
    let out = bottleneck(&costs, 1);
    Ok(Matching {
        cost: out.cost,
        pairs: out.assignment.left_to_right.iter().map(|&j| j as usize).collect(),
    })
}

/// Exact bottleneck matching for an explicit `n × n` cost matrix (row-major).
pub fn bottleneck_match_costs(costs: &[f64], n: usize) -> Result<Matching> {
    if costs.len() != n * n || n == 0 {
        return Err(Error::arg(format!("expected a nonempty {n}×{n} cost matrix")));
    }
    let g = DenseCosts {
        left: n,
        right: n,
        costs: costs.to_vec(),
    };
    let out = bottleneck(&g, 1);
    Ok(Matching {
        cost: out.cost,
        pairs: out.assignment.left_to_right.iter().map(|&j| j as usize).collect(),
    })
}

/// Exact bottleneck matching between raw point sets in R^dim (row-major),
/// under Euclidean distance.
pub fn bottleneck_match_points(a: &[f64], b: &[f64], dim: usize) -> Result<Matching> {
    if dim == 0 || a.len() % dim != 0 || b.len() % dim != 0 {
        return Err(Error::arg("coordinate arrays do not match the dimension"));
    }
    let n = a.len() / dim;
    if b.len() / dim != n {
        return Err(Error::arg(format!("set sizes differ: {n} vs {}", b.len() / dim)));
    }
    let costs: Vec<f64> = a
        .chunks_exact(dim)
        .flat_map(|x| b.chunks_exact(dim).map(move |y| euclidean(x, y)))
        .collect();
    bottleneck_match_costs(&costs, n)
}

/// Whether a perfect matching exists using only pairs at distance `<= t`.
pub fn matching_feasible(a: &PointCloud, b: &PointCloud, metric: Metric, t: f64) -> Result<bool> {
    same_manifold(a, b)?;
    if a.len() != b.len() {
        return Err(Error::arg("set sizes differ"));
    }
    Ok(is_feasible(&PointCosts::new(a, b, metric), 1, t))
}

/// Balanced bottleneck assignment of the quadrature cloud onto the data,
/// each data point receiving exactly `N/n` quadrature points.
pub fn estimate_eps(cloud: &PointCloud, quadrature: &PointCloud, metric: Metric) -> Result<TransportPlan> {
    same_manifold(cloud, quadrature)?;
    let (n, big_n) = (cloud.len(), quadrature.len());
    if n == 0 || big_n % n != 0 {
        return Err(Error::arg(format!(
            "quadrature size {big_n} is not a multiple of the sample size {n}"
        )));
    }
    let capacity = big_n / n;
    let costs = PointCosts::new(quadrature, cloud, metric);
    let out = bottleneck(&costs, capacity);
    let assignment: Vec<usize> = out.assignment.left_to_right.iter().map(|&j| j as usize).collect();
    let realized = (0..big_n)
        .map(|q| costs.cost(q, assignment[q]))
        .fold(0.0f64, f64::max);
    debug_assert!(realized <= out.cost);
    let mut cells: Vec<Vec<usize>> = vec![Vec::with_capacity(capacity); n];
    for (q, &i) in assignment.iter().enumerate() {
        cells[i].push(q);
    }
    debug_assert!(cells.iter().all(|c| c.len() == capacity));
    Ok(TransportPlan {
        assignment,
        capacity,
        eps_hat: realized,
        metric,
        cells,
    })
}

/// Ambient-Euclidean Voronoi ownership of the quadrature points; exact ties
/// go to the lowest data index.
pub fn voronoi_partition(cloud: &PointCloud, quadrature: &PointCloud) -> Result<VoronoiPartition> {
    if cloud.dim() != quadrature.dim() {
        return Err(Error::arg("clouds have different ambient dimensions"));
    }
    if cloud.is_empty() {
        return Err(Error::arg("empty data cloud"));
    }
    let man: &ManifoldSpec = &cloud.manifold;
    let cell = (man.volume / cloud.len() as f64).powf(1.0 / man.m as f64);
    let grid = SpatialGrid::new(cloud.coords(), cloud.dim(), cell);
    let owner = (0..quadrature.len())
        .into_par_iter()
        .map(|q| grid.nearest(cloud.coords(), quadrature.point(q)).map(|(j, _)| j as usize).unwrap())
        .collect();
    Ok(VoronoiPartition {
        owner,
        n: cloud.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{quadrature_cloud, sample, DensitySpec};
    use std::f64::consts::PI;

    #[test]
    fn line_example() {
        let m = bottleneck_match_points(&[0.0, 1.0], &[0.4, 0.6], 1).unwrap();
        assert!((m.cost - 0.4).abs() < 1e-15);
        assert_eq!(m.pairs, vec![0, 1]);
    }

    #[test]
    fn identical_sets_cost_zero() {
        let s = ManifoldSpec::sphere(2).unwrap();
        let c = sample(&s, &DensitySpec::uniform(&s), 30, 4).unwrap();
        let m = bottleneck_match(&c, &c, Metric::Geodesic).unwrap();
        assert_eq!(m.cost, 0.0);
        let plan = estimate_eps(&c, &c, Metric::Geodesic).unwrap();
        assert_eq!(plan.eps_hat, 0.0);
        assert!(plan.cells.iter().enumerate().all(|(i, c)| c == &vec![i]));
    }

    #[test]
    fn antipodal_hemispheres() {
        let s = ManifoldSpec::sphere(2).unwrap();
        let u = DensitySpec::uniform(&s);
        let data = PointCloud::from_points(s.clone(), u.clone(), 0, vec![0.0, 0.0, 1.0, 0.0, 0.0, -1.0]).unwrap();
        let r = 0.5f64.sqrt();
        let quad = PointCloud::from_points(
            s.clone(),
            u,
            0,
            vec![r, 0.0, r, -r, 0.0, -r, 0.0, r, r, 0.0, -r, -r],
        )
        .unwrap();
        let plan = estimate_eps(&data, &quad, Metric::Geodesic).unwrap();
        assert!((plan.eps_hat - PI / 4.0).abs() < 1e-12);
        assert_eq!(plan.cells, vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn size_checks() {
        let t = ManifoldSpec::torus(2).unwrap();
        let u = DensitySpec::uniform(&t);
        let a = sample(&t, &u, 3, 1).unwrap();
        let b = sample(&t, &u, 4, 2).unwrap();
        assert!(bottleneck_match(&a, &b, Metric::Geodesic).is_err());
        let q = quadrature_cloud(&t, &u, 10, 1).unwrap();
        assert!(estimate_eps(&a, &q, Metric::Geodesic).is_err());
    }

    #[test]
    fn balanced_cells_and_monotone_feasibility() {
        let t = ManifoldSpec::torus(2).unwrap();
        let u = DensitySpec::uniform(&t);
        let data = sample(&t, &u, 60, 3).unwrap();
        let quad = quadrature_cloud(&t, &u, 600, 3).unwrap();
        let plan = estimate_eps(&data, &quad, Metric::Geodesic).unwrap();
        assert!(plan.cells.iter().all(|c| c.len() == 10));
        let mut seen = vec![false; 600];
        plan.cells.iter().flatten().for_each(|&q| seen[q] = true);
        assert!(seen.iter().all(|&s| s));
        // dividing with replicated data reproduces the plan's cost
        let costs = PointCosts::new(&quad, &data, Metric::Geodesic);
        assert!(is_feasible(&costs, 10, plan.eps_hat));
        assert!(!is_feasible(&costs, 10, plan.eps_hat * (1.0 - 1e-9)));
    }

    #[test]
    fn voronoi_ties_and_identity() {
        let s = ManifoldSpec::sphere(2).unwrap();
        let u = DensitySpec::uniform(&s);
        let data = PointCloud::from_points(s.clone(), u.clone(), 0, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let r = 0.5f64.sqrt();
        let quad = PointCloud::from_points(s.clone(), u, 0, vec![r, r, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let v = voronoi_partition(&data, &quad).unwrap();
        assert_eq!(v.owner, vec![0, 1]);
    }

    #[test]
    fn plan_json_round_trip() {
        let t = ManifoldSpec::torus(2).unwrap();
        let u = DensitySpec::uniform(&t);
        let data = sample(&t, &u, 5, 3).unwrap();
        let quad = quadrature_cloud(&t, &u, 50, 3).unwrap();
        let plan = estimate_eps(&data, &quad, Metric::Euclidean).unwrap();
        let mut buf = Vec::new();
        plan.write_json(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"eps_hat\"") && text.contains("\"capacity\":10"));
        assert_eq!(TransportPlan::from_json(&text).unwrap(), plan);
    }
}
