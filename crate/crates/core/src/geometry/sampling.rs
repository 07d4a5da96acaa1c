use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::DensitySpec;
use super::manifold::{ManifoldKind, ManifoldSpec};
use crate::error::{Error, Result};

/// Stream offset separating quadrature clouds from data clouds drawn with the same seed.
const QUADRATURE_STREAM: u64 = 1 << 62;
const PROBE_SEED: u64 = 0x5eed_0f_9b0be;
const WARM_UP_PROPOSALS: u64 = 1000;

/// `n` points in R^d sampled from a density on a model manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub manifold: ManifoldSpec,
    pub density: DensitySpec,
    pub seed: u64,
    points: Vec<f64>,
}

impl PointCloud {
    /// Wraps explicit coordinates, checking every point lies on the manifold.
    pub fn from_points(
        manifold: ManifoldSpec,
        density: DensitySpec,
        seed: u64,
        points: Vec<f64>,
    ) -> Result<Self> {
        if points.len() % manifold.d != 0 {
            return Err(Error::arg(format!(
                "coordinate count {} is not a multiple of d = {}",
                points.len(),
                manifold.d
            )));
        }
        for (i, x) in points.chunks(manifold.d).enumerate() {
            let deviation = manifold.deviation(x);
            if deviation > super::manifold::ON_MANIFOLD_TOL {
                return Err(Error::OffManifold {
                    index: i,
                    deviation,
                });
            }
        }
        Ok(PointCloud {
            manifold,
            density,
            seed,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.manifold.d
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.manifold.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.manifold.d;
        &self.points[i * d..(i + 1) * d]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.manifold.d)
    }

    /// Row-major coordinates.
    pub fn coords(&self) -> &[f64] {
        &self.points
    }

    /// Density value `p(x_i)` at every point.
    pub fn density_values(&self) -> Vec<f64> {
        self.iter()
            .map(|x| self.density.eval(&self.manifold, x))
            .collect()
    }

    pub fn with_density(mut self, density: DensitySpec) -> Self {
        self.density = density;
        self
    }
}

/// Draws `n` i.i.d. points from `density` on `manifold`.
///
/// Point `i` is generated from its own ChaCha stream keyed by `(seed, i)`, so
/// the result does not depend on how the work is scheduled.
pub fn sample(
    manifold: &ManifoldSpec,
    density: &DensitySpec,
    n: usize,
    seed: u64,
) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::arg("sample size must be at least 1"));
    }
    draw(manifold, density, n, seed, 0)
}

/// Monte Carlo cloud used for every L²(M, ρμ) inner product.
pub fn quadrature_cloud(
    manifold: &ManifoldSpec,
    density: &DensitySpec,
    size: usize,
    seed: u64,
) -> Result<PointCloud> {
    if size == 0 {
        return Err(Error::arg("quadrature size must be at least 1"));
    }
    draw(manifold, density, size, seed, QUADRATURE_STREAM)
}

fn draw(
    manifold: &ManifoldSpec,
    density: &DensitySpec,
    n: usize,
    seed: u64,
    stream_offset: u64,
) -> Result<PointCloud> {
    let d = manifold.d;
    let uniform = density.is_uniform();
    let proposals = AtomicU64::new(0);
    let envelope_broken = AtomicBool::new(false);
    let max_tries = (10_000.0 * density.alpha.max(1.0)) as u64;

    let rows: Vec<Option<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_offset + i as u64);
            if uniform {
                proposals.fetch_add(1, Ordering::Relaxed);
                return Some(uniform_point(manifold, &mut rng));
            }
            for _ in 0..max_tries {
                let x = uniform_point(manifold, &mut rng);
                proposals.fetch_add(1, Ordering::Relaxed);
                let accept = density.eval(manifold, &x) * manifold.volume / density.alpha;
                if accept > 1.0 {
                    envelope_broken.store(true, Ordering::Relaxed);
                    return None;
                }
                if rng.random::<f64>() < accept {
                    return Some(x);
                }
            }
            None
        })
        .collect();

    if envelope_broken.load(Ordering::Relaxed) {
        return Err(Error::InvalidDensityBound(format!(
            "alpha = {} does not dominate p * vol(M)",
            density.alpha
        )));
    }
    let total = proposals.load(Ordering::Relaxed);
    if total >= WARM_UP_PROPOSALS && (n as f64) / (total as f64) < 1.0 / (10.0 * density.alpha) {
        return Err(Error::InvalidDensityBound(format!(
            "acceptance rate {:.3e} below 1/(10 alpha)",
            n as f64 / total as f64
        )));
    }
    let mut points = Vec::with_capacity(n * d);
    for row in rows {
        match row {
            Some(x) => points.extend_from_slice(&x),
            None => {
                return Err(Error::InvalidDensityBound(
                    "rejection sampler exhausted its proposal budget".into(),
                ))
            }
        }
    }
    Ok(PointCloud {
        manifold: manifold.clone(),
        density: density.clone(),
        seed,
        points,
    })
}

fn uniform_point(manifold: &ManifoldSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match manifold.kind {
        ManifoldKind::Sphere => loop {
            let mut x: Vec<f64> = (0..manifold.d).map(|_| rng.sample(StandardNormal)).collect();
            let r = super::manifold::norm(&x);
            if r > 1e-8 {
                x.iter_mut().for_each(|v| *v /= r);
                return x;
            }
        },
        ManifoldKind::Torus => {
            let r = 1.0 / (2.0 * PI);
            let mut x = vec![0.0; manifold.d];
            for i in 0..manifold.m {
                let (s, c) = (2.0 * PI * rng.random::<f64>()).sin_cos();
                x[i] = r * c;
                x[manifold.m + i] = r * s;
            }
            x
        }
    }
}

/// Deterministic uniform probe set, row-major.
pub(crate) fn probe_points(manifold: &ManifoldSpec, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    (0..count)
        .flat_map(|_| uniform_point(manifold, &mut rng))
        .collect()
}
