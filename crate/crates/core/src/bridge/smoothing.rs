//! Geodesic-range operators on the quadrature cloud: the smoothing `Λ_r`
//! and the nonlocal energy `E_r`.

use rayon::prelude::*;

use super::field::ContinuumField;
use crate::error::{Error, Result};
use crate::geometry::{ManifoldKind, PointCloud};
use crate::grid::SpatialGrid;
use crate::kernel::KernelSpec;

/// Range queries under geodesic distance. The sphere prunes with an ambient
/// grid (chord <= geodesic); the torus buckets its angles on a periodic grid.
pub(crate) struct GeodesicIndex<'a> {
    cloud: &'a PointCloud,
    radius: f64,
    backend: Backend,
}

enum Backend {
    Ambient(SpatialGrid),
    Periodic(PeriodicGrid),
}

/// Cells of side `1/per_axis >= radius/SUBDIV` on the unit torus; neighbors
/// within `radius` lie at most `SUBDIV` cells away along each axis.
struct PeriodicGrid {
    m: usize,
    per_axis: usize,
    angles: Vec<f64>,
    cells: Vec<Vec<u32>>,
    offsets: Vec<Vec<i64>>,
}

const SUBDIV: i64 = 2;

impl PeriodicGrid {
    fn new(cloud: &PointCloud, radius: f64) -> Self {
        let m = cloud.manifold.m;
        let angles: Vec<f64> = cloud
            .iter()
            .flat_map(|x| cloud.manifold.torus_angles(x))
            .map(|t| t.rem_euclid(1.0))
            .collect();
        let per_axis = ((SUBDIV as f64 / radius).floor() as usize).clamp(1, 1 << 10);
        let span = 2 * SUBDIV + 1;
        // with few cells per axis the offsets wrap onto the same cell; keep each once
        let reach = if (per_axis as i64) < span { 0..per_axis as i64 } else { -SUBDIV..SUBDIV + 1 };
        let mut offsets: Vec<Vec<i64>> = vec![Vec::new()];
        for _ in 0..m {
            offsets = offsets
                .into_iter()
                .flat_map(|o| {
                    reach.clone().map(move |d| {
                        let mut o = o.clone();
                        o.push(d);
                        o
                    })
                })
                .collect();
        }
        let total = per_axis.pow(m as u32);
        let mut cells = vec![Vec::new(); total];
        for i in 0..cloud.len() {
            let c = Self::cell_of(&angles[i * m..(i + 1) * m], per_axis);
            cells[Self::flat(&c, per_axis)].push(i as u32);
        }
        PeriodicGrid {
            m,
            per_axis,
            angles,
            cells,
            offsets,
        }
    }

    fn cell_of(theta: &[f64], per_axis: usize) -> Vec<i64> {
        theta
            .iter()
            .map(|t| ((t.rem_euclid(1.0) * per_axis as f64) as i64).min(per_axis as i64 - 1))
            .collect()
    }

    fn flat(c: &[i64], per_axis: usize) -> usize {
        c.iter().fold(0usize, |acc, &v| acc * per_axis + v as usize)
    }

    /// Squared geodesic distance; stored angles lie in [0, 1).
    fn distance_sq(&self, i: usize, j: usize) -> f64 {
        let m = self.m;
        let (a, b) = (&self.angles[i * m..(i + 1) * m], &self.angles[j * m..(j + 1) * m]);
        a.iter()
            .zip(b)
            .map(|(s, t)| {
                let g = (s - t).abs();
                let g = g.min(1.0 - g);
                g * g
            })
            .sum()
    }

    fn for_each_candidate<F: FnMut(usize)>(&self, i: usize, mut visit: F) {
        let m = self.m;
        let base = Self::cell_of(&self.angles[i * m..(i + 1) * m], self.per_axis);
        let p = self.per_axis as i64;
        let mut cell = vec![0i64; m];
        for off in &self.offsets {
            for d in 0..m {
                cell[d] = (base[d] + off[d]).rem_euclid(p);
            }
            for &j in &self.cells[Self::flat(&cell, self.per_axis)] {
                visit(j as usize);
            }
        }
    }
}

impl<'a> GeodesicIndex<'a> {
    pub fn new(cloud: &'a PointCloud, radius: f64) -> Self {
        let backend = match cloud.manifold.kind {
            ManifoldKind::Torus => Backend::Periodic(PeriodicGrid::new(cloud, radius)),
            ManifoldKind::Sphere => Backend::Ambient(SpatialGrid::new(cloud.coords(), cloud.dim(), radius)),
        };
        GeodesicIndex { cloud, radius, backend }
    }

    /// Calls `visit(j, d)` for every cloud point within geodesic distance
    /// `radius` of point `i`, in a fixed order.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, i: usize, mut visit: F) {
        match &self.backend {
            Backend::Ambient(grid) => {
                let man = &self.cloud.manifold;
                let x = self.cloud.point(i);
                grid.for_each_candidate(x, self.radius, |j| {
                    let d = man.geodesic_unchecked(x, self.cloud.point(j as usize));
                    if d <= self.radius {
                        visit(j as usize, d);
                    }
                });
            }
            Backend::Periodic(grid) => {
                let r2 = self.radius * self.radius;
                grid.for_each_candidate(i, |j| {
                    let d2 = grid.distance_sq(i, j);
                    if d2 <= r2 {
                        visit(j, d2.sqrt());
                    }
                })
            }
        }
    }
}

/// `θ(x) = Λ_r^0 1 (x)` at every quadrature point.
pub fn smoothing_theta(quadrature: &PointCloud, kernel: &KernelSpec, r: f64) -> Result<Vec<f64>> {
    let ones = vec![1.0; quadrature.len()];
    let (raw, theta) = smooth_raw(quadrature, kernel, r, &[&ones])?;
    drop(raw);
    Ok(theta)
}

/// Applies `Λ_r^0` to several value arrays at once; returns the results and θ.
fn smooth_raw(
    quadrature: &PointCloud,
    kernel: &KernelSpec,
    r: f64,
    fields: &[&[f64]],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::arg(format!("smoothing radius must be positive, got {r}")));
    }
    let n = quadrature.len();
    let inv_p: Vec<f64> = quadrature.density_values().iter().map(|p| 1.0 / p).collect();
    let index = GeodesicIndex::new(quadrature, r);
    let norm = 1.0 / (n as f64 * r.powi(kernel.m as i32));
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut acc = vec![0.0; fields.len()];
            let mut theta = 0.0;
            index.for_each_within(x, |y, d| {
                let w = kernel.psi(d / r) * inv_p[y];
                theta += w;
                for (a, f) in acc.iter_mut().zip(fields) {
                    *a += w * f[y];
                }
            });
            (acc.into_iter().map(|a| a * norm).collect(), theta * norm)
        })
        .collect();
    if let Some(index) = rows.iter().position(|r| !(r.1 > 0.0)) {
        return Err(Error::RadiusTooSmall { index, radius: r });
    }
    let theta: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let mut out = vec![vec![0.0; n]; fields.len()];
    for (x, (acc, _)) in rows.into_iter().enumerate() {
        for (k, a) in acc.into_iter().enumerate() {
            out[k][x] = a;
        }
    }
    Ok((out, theta))
}

/// `Λ_r f = Λ_r^0 f / θ`, with `Λ_r^0 f(x)` the quadrature average of
/// `f(y) ψ(d(x,y)/r) / (r^m p(y))`. Constants are preserved exactly.
pub fn smooth_lambda(
    f: &ContinuumField,
    quadrature: &PointCloud,
    kernel: &KernelSpec,
    r: f64,
) -> Result<ContinuumField> {
    Ok(smooth_lambda_many(&[f], quadrature, kernel, r)?.remove(0))
}

/// [`smooth_lambda`] for several fields sharing one neighbor sweep.
pub fn smooth_lambda_many(
    fields: &[&ContinuumField],
    quadrature: &PointCloud,
    kernel: &KernelSpec,
    r: f64,
) -> Result<Vec<ContinuumField>> {
    for f in fields {
        if f.len() != quadrature.len() {
            return Err(Error::arg("field and quadrature sizes differ"));
        }
    }
    let values: Vec<&[f64]> = fields.iter().map(|f| f.values.as_slice()).collect();
    let (raw, theta) = smooth_raw(quadrature, kernel, r, &values)?;
    Ok(raw
        .into_iter()
        .zip(fields)
        .map(|(v, f)| {
            let vals: Vec<f64> = v.iter().zip(&theta).map(|(a, t)| a / t).collect();
            f.with_values(vals)
        })
        .collect())
}

/// Monte Carlo `E_r(f) = ∫∫ η(d(x,y)/r) (f(y) − f(x))² dμ(x) dμ(y)`.
pub fn nonlocal_energy(f: &ContinuumField, quadrature: &PointCloud, kernel: &KernelSpec, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::arg(format!("radius must be positive, got {r}")));
    }
    if f.len() != quadrature.len() {
        return Err(Error::arg("field and quadrature sizes differ"));
    }
    let n = quadrature.len();
    let index = GeodesicIndex::new(quadrature, r);
    let v = &f.values;
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut acc = 0.0;
            index.for_each_within(x, |y, d| {
                let diff = v[y] - v[x];
                acc += kernel.eta(d / r) * diff * diff;
            });
            acc
        })
        .collect();
    Ok(rows.iter().sum::<f64>() / (n as f64 * n as f64))
}
