use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::density::DensitySpec;
use super::manifold::{ManifoldKind, ManifoldSpec};
use crate::error::{Error, Result};
use crate::laplacian::LaplacianKind;

const ZONAL_SEED: u64 = 0x2014_a11e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cos,
    Sin,
}

/// One term `a cos(2π k·θ) + b sin(2π k·θ)` of a torus Fourier series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub wavevector: Vec<i64>,
    pub cos: f64,
    pub sin: f64,
}

/// Closed-form eigenfunction of a limit operator, evaluated at ambient points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Eigenfunction {
    Constant,
    /// Sphere: the ambient coordinate `x_axis`, a degree-1 harmonic.
    Coordinate { axis: usize },
    /// Sphere: zonal harmonic `C_l^{(m-1)/2}(<x, direction>)` of degree `l`.
    Zonal { degree: usize, direction: Vec<f64> },
    /// Torus: `cos` or `sin` of `2π k·θ`.
    TorusWave { wavevector: Vec<i64>, phase: Phase },
    /// Torus: finite Fourier series.
    TorusSeries { terms: Vec<FourierTerm> },
}

impl Eigenfunction {
    pub fn value(&self, manifold: &ManifoldSpec, x: &[f64]) -> f64 {
        match self {
            Eigenfunction::Constant => 1.0,
            Eigenfunction::Coordinate { axis } => x[*axis],
            Eigenfunction::Zonal { degree, direction } => {
                let t: f64 = x.iter().zip(direction).map(|(a, b)| a * b).sum();
                gegenbauer(*degree, gegenbauer_index(manifold), t)
            }
            Eigenfunction::TorusWave { wavevector, phase } => {
                let arg = 2.0 * PI * dot_angles(wavevector, &manifold.torus_angles(x));
                match phase {
                    Phase::Cos => arg.cos(),
                    Phase::Sin => arg.sin(),
                }
            }
            Eigenfunction::TorusSeries { terms } => {
                let th = manifold.torus_angles(x);
                terms
                    .iter()
                    .map(|t| {
                        let (s, c) = (2.0 * PI * dot_angles(&t.wavevector, &th)).sin_cos();
                        t.cos * c + t.sin * s
                    })
                    .sum()
            }
        }
    }

    /// Riemannian gradient as an ambient tangent vector.
    pub fn gradient(&self, manifold: &ManifoldSpec, x: &[f64]) -> Vec<f64> {
        match self {
            Eigenfunction::Constant => vec![0.0; manifold.d],
            Eigenfunction::Coordinate { axis } => {
                let xa = x[*axis];
                let mut g: Vec<f64> = x.iter().map(|v| -xa * v).collect();
                g[*axis] += 1.0;
                g
            }
            Eigenfunction::Zonal { degree, direction } => {
                let t: f64 = x.iter().zip(direction).map(|(a, b)| a * b).sum();
                let lam = gegenbauer_index(manifold);
                let dc = if *degree == 0 {
                    0.0
                } else {
                    2.0 * lam * gegenbauer(degree - 1, lam + 1.0, t)
                };
                direction
                    .iter()
                    .zip(x)
                    .map(|(a, xi)| dc * (a - t * xi))
                    .collect()
            }
            Eigenfunction::TorusWave { .. } | Eigenfunction::TorusSeries { .. } => {
                let th = manifold.torus_angles(x);
                let partials = self.torus_partials(&th);
                let mut g = vec![0.0; manifold.d];
                for (axis, dp) in partials.iter().enumerate() {
                    let t = manifold.torus_tangent(x, axis);
                    g.iter_mut().zip(&t).for_each(|(gi, ti)| *gi += dp * ti);
                }
                g
            }
        }
    }

    /// Squared gradient norm `|∇f|²` at `x`.
    pub fn grad_norm_sq(&self, manifold: &ManifoldSpec, x: &[f64]) -> f64 {
        self.gradient(manifold, x).iter().map(|g| g * g).sum()
    }

    // derivatives with respect to the unit-speed angle coordinates
    fn torus_partials(&self, th: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; th.len()];
        let mut add = |k: &[i64], a: f64, b: f64| {
            let (s, c) = (2.0 * PI * dot_angles(k, th)).sin_cos();
            let scale = 2.0 * PI * (-a * s + b * c);
            for (o, &ki) in out.iter_mut().zip(k) {
                *o += scale * ki as f64;
            }
        };
        match self {
            Eigenfunction::TorusWave { wavevector, phase } => match phase {
                Phase::Cos => add(wavevector, 1.0, 0.0),
                Phase::Sin => add(wavevector, 0.0, 1.0),
            },
            Eigenfunction::TorusSeries { terms } => {
                for t in terms {
                    add(&t.wavevector, t.cos, t.sin);
                }
            }
            _ => {}
        }
        out
    }
}

fn dot_angles(k: &[i64], th: &[f64]) -> f64 {
    k.iter().zip(th).map(|(&a, b)| a as f64 * b).sum()
}

fn gegenbauer_index(manifold: &ManifoldSpec) -> f64 {
    (manifold.m as f64 - 1.0) / 2.0
}

/// Gegenbauer polynomial `C_n^λ(t)` by the three-term recurrence.
pub(crate) fn gegenbauer(n: usize, lam: f64, t: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * lam * t;
    for k in 2..=n {
        let kf = k as f64;
        let next = (2.0 * t * (kf + lam - 1.0) * cur - (kf + 2.0 * lam - 2.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    cur
}

/// A distinct eigenvalue of a limit operator with a spanning set of eigenfunctions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    pub functions: Vec<Eigenfunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub kind: LaplacianKind,
    pub entries: Vec<SpectrumEntry>,
}

impl SpectrumTable {
    /// Eigenvalues repeated by multiplicity, truncated to `count`.
    pub fn eigenvalues(&self, count: usize) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.eigenvalue, e.multiplicity))
            .take(count)
            .collect()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// Entry holding the `index`-th eigenvalue (0-based, counted with multiplicity).
    pub fn entry_of(&self, index: usize) -> Option<usize> {
        let mut seen = 0;
        for (e, entry) in self.entries.iter().enumerate() {
            seen += entry.multiplicity;
            if index < seen {
                return Some(e);
            }
        }
        None
    }

    /// First 0-based eigenvalue index occupied by entry `e`.
    pub fn first_index(&self, e: usize) -> usize {
        self.entries[..e].iter().map(|x| x.multiplicity).sum()
    }

    /// Distance from entry `e` to its nearest distinct neighbor.
    pub fn gap(&self, e: usize) -> f64 {
        let lam = self.entries[e].eigenvalue;
        let below = e
            .checked_sub(1)
            .map(|j| lam - self.entries[j].eigenvalue)
            .unwrap_or(f64::INFINITY);
        let above = self
            .entries
            .get(e + 1)
            .map(|x| x.eigenvalue - lam)
            .unwrap_or(f64::INFINITY);
        below.min(above)
    }
}

/// Closed-form spectrum of the limit operator for uniform density.
///
/// The table covers at least `count` eigenvalues (with multiplicity) plus one
/// further distinct level, so the gap of every requested cluster is defined.
pub fn analytic_spectrum(
    manifold: &ManifoldSpec,
    density: &DensitySpec,
    kind: LaplacianKind,
    count: usize,
) -> Result<SpectrumTable> {
    if !density.is_uniform() {
        return Err(Error::Unsupported(
            "closed-form spectra exist only for uniform density; use the Fourier-Galerkin oracle"
                .into(),
        ));
    }
    let scale = match kind {
        LaplacianKind::Unnormalized => 1.0 / manifold.volume,
        LaplacianKind::RandomWalk | LaplacianKind::Symmetric => 1.0,
    };
    let mut entries = Vec::new();
    let mut covered = 0;
    let mut reached = false;
    let mut level = 0usize;
    loop {
        let entry = match manifold.kind {
            ManifoldKind::Sphere => Some(sphere_level(manifold, level)),
            ManifoldKind::Torus => torus_level(manifold.m, level),
        };
        level += 1;
        let Some(entry) = entry else { continue };
        covered += entry.multiplicity;
        entries.push(SpectrumEntry {
            eigenvalue: entry.eigenvalue * scale,
            ..entry
        });
        if reached {
            break;
        }
        reached = covered >= count;
    }
    Ok(SpectrumTable { kind, entries })
}

/// Dimension of degree-`l` spherical harmonics on S^m.
pub fn sphere_multiplicity(m: usize, l: usize) -> usize {
    let top = binomial(l + m, m);
    let low = if l >= 2 { binomial(l + m - 2, m) } else { 0 };
    top - low
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn sphere_level(manifold: &ManifoldSpec, l: usize) -> SpectrumEntry {
    let m = manifold.m;
    let mult = sphere_multiplicity(m, l);
    let functions = match l {
        0 => vec![Eigenfunction::Constant],
        1 => (0..manifold.d)
            .map(|axis| Eigenfunction::Coordinate { axis })
            .collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(ZONAL_SEED + l as u64);
            (0..mult)
                .map(|_| {
                    let mut a: Vec<f64> = (0..manifold.d)
                        .map(|_| StandardNormal.sample(&mut rng))
                        .collect();
                    let r = super::manifold::norm(&a);
                    a.iter_mut().for_each(|v| *v /= r);
                    Eigenfunction::Zonal {
                        degree: l,
                        direction: a,
                    }
                })
                .collect()
        }
    };
    SpectrumEntry {
        eigenvalue: (l * (l + m - 1)) as f64,
        multiplicity: mult,
        functions,
    }
}

fn torus_level(m: usize, s: usize) -> Option<SpectrumEntry> {
    let r = (s as f64).sqrt().floor() as i64;
    let mut vectors = Vec::new();
    let mut k = vec![-r; m];
    loop {
        if k.iter().map(|v| v * v).sum::<i64>() == s as i64 {
            vectors.push(k.clone());
        }
        // odometer over [-r, r]^m
        let mut i = 0;
        while i < m {
            k[i] += 1;
            if k[i] > r {
                k[i] = -r;
                i += 1;
            } else {
                break;
            }
        }
        if i == m {
            break;
        }
    }
    if vectors.is_empty() {
        return None;
    }
    let mut functions = Vec::new();
    if s == 0 {
        functions.push(Eigenfunction::Constant);
    } else {
        vectors.sort();
        for k in vectors.iter().filter(|k| is_positive(k)) {
            for phase in [Phase::Cos, Phase::Sin] {
                functions.push(Eigenfunction::TorusWave {
                    wavevector: k.clone(),
                    phase,
                });
            }
        }
    }
    Some(SpectrumEntry {
        eigenvalue: 4.0 * PI * PI * s as f64,
        multiplicity: vectors.len(),
        functions,
    })
}

// first nonzero component positive
fn is_positive(k: &[i64]) -> bool {
    k.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0)
}
