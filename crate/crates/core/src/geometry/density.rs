use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::manifold::{ManifoldKind, ManifoldSpec};
use crate::error::{Error, Result};

/// Closed-form sampling densities with respect to Riemannian volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum DensityForm {
    /// `p = 1 / vol(M)`.
    Uniform,
    /// Sphere only: `p(x) = (1 + strength * x_last) / vol(S^m)`.
    SphereTilt { strength: f64 },
    /// Torus only: `p(θ) = 1 + amplitude * cos(2π θ_axis)`.
    TorusCosine { amplitude: f64, axis: usize },
}

/// A density `p` with its bound `α` (so `1/α <= p <= α`) and Lipschitz constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    #[serde(flatten)]
    pub form: DensityForm,
    pub alpha: f64,
    pub lipschitz: f64,
}

impl DensitySpec {
    pub fn uniform(manifold: &ManifoldSpec) -> Self {
        let p = 1.0 / manifold.volume;
        DensitySpec {
            form: DensityForm::Uniform,
            alpha: p.max(1.0 / p),
            lipschitz: 0.0,
        }
    }

    pub fn sphere_tilt(manifold: &ManifoldSpec, strength: f64) -> Result<Self> {
        if manifold.kind != ManifoldKind::Sphere {
            return Err(Error::arg("sphere tilt density requires a sphere"));
        }
        if !(strength.abs() < 1.0) {
            return Err(Error::arg("tilt strength must lie in (-1, 1)"));
        }
        let v = manifold.volume;
        let a = strength.abs();
        Ok(DensitySpec {
            form: DensityForm::SphereTilt { strength },
            alpha: ((1.0 + a) / v).max(v / (1.0 - a)),
            lipschitz: a / v,
        })
    }

    pub fn torus_cosine(manifold: &ManifoldSpec, amplitude: f64, axis: usize) -> Result<Self> {
        if manifold.kind != ManifoldKind::Torus {
            return Err(Error::arg("cosine density requires a torus"));
        }
        if axis >= manifold.m {
            return Err(Error::arg(format!("axis {axis} out of range")));
        }
        if !(amplitude.abs() < 1.0) {
            return Err(Error::arg("cosine amplitude must lie in (-1, 1)"));
        }
        let a = amplitude.abs();
        Ok(DensitySpec {
            form: DensityForm::TorusCosine { amplitude, axis },
            alpha: (1.0 + a).max(1.0 / (1.0 - a)),
            lipschitz: 2.0 * PI * a,
        })
    }

    /// A density with caller-supplied constants. The bound `α` is checked on
    /// a probe set; it is never estimated.
    pub fn with_constants(
        manifold: &ManifoldSpec,
        form: DensityForm,
        alpha: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        let spec = DensitySpec {
            form,
            alpha,
            lipschitz,
        };
        if alpha < 1.0 || lipschitz < 0.0 {
            return Err(Error::InvalidDensityBound(format!(
                "need alpha >= 1 and L_p >= 0, got alpha = {alpha}, L_p = {lipschitz}"
            )));
        }
        spec.check_bounds(manifold)?;
        Ok(spec)
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.form, DensityForm::Uniform)
    }

    /// Evaluates `p(x)` at a point on the manifold.
    pub fn eval(&self, manifold: &ManifoldSpec, x: &[f64]) -> f64 {
        match self.form {
            DensityForm::Uniform => 1.0 / manifold.volume,
            DensityForm::SphereTilt { strength } => {
                (1.0 + strength * x[manifold.d - 1]) / manifold.volume
            }
            DensityForm::TorusCosine { amplitude, axis } => {
                let t = super::manifold::circle_angle(x[axis], x[manifold.m + axis]);
                1.0 + amplitude * (2.0 * PI * t).cos()
            }
        }
    }

    /// Verifies `1/α <= p <= α` on a deterministic probe set.
    pub fn check_bounds(&self, manifold: &ManifoldSpec) -> Result<()> {
        let probe = super::sampling::probe_points(manifold, 4096);
        for x in probe.chunks(manifold.d) {
            let p = self.eval(manifold, x);
            if !(p >= 1.0 / self.alpha - 1e-12 && p <= self.alpha + 1e-12) {
                return Err(Error::InvalidDensityBound(format!(
                    "p = {p} violates 1/alpha <= p <= alpha with alpha = {}",
                    self.alpha
                )));
            }
        }
        Ok(())
    }
}
