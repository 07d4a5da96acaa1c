use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Eigenfunction, PointCloud};
use crate::laplacian::LaplacianKind;

/// Vertex weight ρ of the limit inner product `L²(M, ρμ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rho {
    /// `ρ ≡ 1`, the unnormalized limit.
    One,
    /// `ρ = p`, the random-walk limit.
    Density,
}

impl Rho {
    pub fn for_kind(kind: LaplacianKind) -> Self {
        match kind {
            LaplacianKind::Unnormalized => Rho::One,
            LaplacianKind::RandomWalk | LaplacianKind::Symmetric => Rho::Density,
        }
    }

    pub fn kind(self) -> LaplacianKind {
        match self {
            Rho::One => LaplacianKind::Unnormalized,
            Rho::Density => LaplacianKind::RandomWalk,
        }
    }

    /// ρ at every quadrature point.
    pub fn values(self, quadrature: &PointCloud) -> Vec<f64> {
        match self {
            Rho::One => vec![1.0; quadrature.len()],
            Rho::Density => quadrature.density_values(),
        }
    }
}

/// A function sampled on the quadrature cloud, with the weight ρ of its
/// inner product at each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuumField {
    pub values: Vec<f64>,
    pub rho: Vec<f64>,
}

impl ContinuumField {
    pub fn new(values: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        if values.len() != rho.len() {
            return Err(Error::arg(format!(
                "field has {} values but {} weights",
                values.len(),
                rho.len()
            )));
        }
        Ok(ContinuumField { values, rho })
    }

    pub fn from_fn(quadrature: &PointCloud, rho: Rho, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        ContinuumField {
            values: quadrature.iter().map(&f).collect(),
            rho: rho.values(quadrature),
        }
    }

    pub fn from_eigenfunction(quadrature: &PointCloud, rho: Rho, f: &Eigenfunction) -> Self {
        let man = &quadrature.manifold;
        Self::from_fn(quadrature, rho, |x| f.value(man, x))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Quadrature inner product `(1/N) Σ f g ρ`.
    pub fn inner(&self, other: &ContinuumField) -> f64 {
        inner(&self.values, &other.values, &self.rho)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// `‖self − other‖` in this field's inner product.
    pub fn distance(&self, other: &ContinuumField) -> f64 {
        let diff: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        inner(&diff, &diff, &self.rho).sqrt()
    }

    pub fn scaled(&self, c: f64) -> ContinuumField {
        ContinuumField {
            values: self.values.iter().map(|v| v * c).collect(),
            rho: self.rho.clone(),
        }
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> ContinuumField {
        ContinuumField {
            values,
            rho: self.rho.clone(),
        }
    }
}

pub(crate) fn inner(a: &[f64], b: &[f64], rho: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).zip(rho).map(|((x, y), w)| x * y * w).sum();
    s / a.len().max(1) as f64
}
