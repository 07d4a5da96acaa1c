use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, DensitySpec, ManifoldKind, ManifoldSpec};
use crate::kernel::{make_kernel, KernelProfile, KernelSpec};
use crate::laplacian::LaplacianKind;

const MEMORY_LIMIT_BYTES: f64 = 4.0 * 1024.0 * 1024.0 * 1024.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSection {
    pub kind: ManifoldKind,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySection {
    Uniform,
    SphereTilt { strength: f64 },
    TorusCosine { amplitude: f64, axis: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    #[serde(default = "default_kernel")]
    pub kernel: KernelProfile,
    #[serde(default = "default_kind")]
    pub kind: LaplacianKind,
    #[serde(default = "default_true")]
    pub self_loops: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HRule {
    /// `h = c sqrt(log(n)^{p_m} / n^{1/m})`.
    PaperSchedule,
    /// `h = c`.
    Fixed,
    /// `h = c sqrt(ε̂)`.
    SqrtEps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthSection {
    pub rule: HRule,
    /// The constant `c` of the rule.
    #[serde(default = "default_one")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub n: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Number of eigenpairs tracked; `k + 2` are computed.
    pub k: usize,
    /// Quadrature size `N = c n`.
    #[serde(default = "default_multiplier")]
    pub quadrature_multiplier: usize,
    /// Compute eigenfunction alignment columns.
    #[serde(default = "default_true")]
    pub eigenfunctions: bool,
    /// Parallel rows; 0 uses the global pool.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_budget")]
    pub row_budget_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_eig_tol")]
    pub eig_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eig_tol: default_eig_tol(),
            max_iter: default_max_iter(),
        }
    }
}

/// A convergence study, read from a TOML file with the sections
/// `[manifold]`, `[density]`, `[graph]`, `[bandwidth]`, `[study]` and
/// optionally `[tolerances]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub manifold: ManifoldSection,
    #[serde(default = "default_density")]
    pub density: DensitySection,
    pub graph: GraphSection,
    pub bandwidth: BandwidthSection,
    pub study: StudySection,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_kernel() -> KernelProfile {
    KernelProfile::Gauss
}
fn default_kind() -> LaplacianKind {
    LaplacianKind::Unnormalized
}
fn default_true() -> bool {
    true
}
fn default_one() -> f64 {
    1.0
}
fn default_multiplier() -> usize {
    20
}
fn default_budget() -> f64 {
    120.0
}
fn default_eig_tol() -> f64 {
    crate::eigen::DEFAULT_TOL
}
fn default_max_iter() -> usize {
    crate::eigen::DEFAULT_MAX_ITER
}
fn default_density() -> DensitySection {
    DensitySection::Uniform
}

/// Exponent `p_m` of the bandwidth schedule.
pub fn schedule_exponent(m: usize) -> f64 {
    if m == 2 {
        0.75
    } else {
        1.0 / m as f64
    }
}

/// `sqrt(log(n)^{p_m} / n^{1/m})`.
pub fn scheduled_h(n: usize, m: usize) -> f64 {
    let n = n as f64;
    (n.ln().powf(schedule_exponent(m)) / n.powf(1.0 / m as f64)).sqrt()
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn manifold_spec(&self) -> Result<ManifoldSpec> {
        ManifoldSpec::from_kind(self.manifold.kind, self.manifold.m)
    }

    pub fn density_spec(&self, manifold: &ManifoldSpec) -> Result<DensitySpec> {
        match self.density {
            DensitySection::Uniform => Ok(DensitySpec::uniform(manifold)),
            DensitySection::SphereTilt { strength } => DensitySpec::sphere_tilt(manifold, strength),
            DensitySection::TorusCosine { amplitude, axis } => {
                DensitySpec::torus_cosine(manifold, amplitude, axis)
            }
        }
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        make_kernel(self.graph.kernel, self.manifold.m)
    }

    /// Bandwidth for sample size `n` given the realized `ε̂`.
    pub fn bandwidth(&self, n: usize, eps_hat: f64) -> f64 {
        let c = self.bandwidth.value;
        match self.bandwidth.rule {
            HRule::PaperSchedule => c * scheduled_h(n, self.manifold.m),
            HRule::Fixed => c,
            HRule::SqrtEps => c * eps_hat.sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.study;
        if s.n.is_empty() || s.n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("n grid must be nonempty and strictly increasing"));
        }
        if s.n[0] < 2 {
            return Err(Error::arg("every n must be at least 2"));
        }
        if s.seeds.is_empty() {
            return Err(Error::arg("seeds must be nonempty"));
        }
        if s.k == 0 {
            return Err(Error::arg("k must be at least 1"));
        }
        if s.quadrature_multiplier == 0 {
            return Err(Error::arg("quadrature multiplier must be at least 1"));
        }
        if !(self.bandwidth.value > 0.0) {
            return Err(Error::arg("bandwidth constant must be positive"));
        }
        if !(s.row_budget_secs > 0.0) {
            return Err(Error::arg("row budget must be positive"));
        }
        let man = self.manifold_spec()?;
        let dens = self.density_spec(&man)?;
        self.kernel_spec()?;
        // ε̂ is unknown before the run; the sqrt-eps rule is sized with ε̂ = 1
        let n = *s.n.last().unwrap();
        let h = self.bandwidth(n, 1.0);
        let nf = n as f64;
        let edges = (nf * nf * unit_ball_volume(man.m) * h.powi(man.m as i32) * dens.alpha).min(nf * nf);
        let bytes = edges * 12.0 + (s.k + 2) as f64 * n as f64 * 8.0 * 8.0;
        if bytes > MEMORY_LIMIT_BYTES {
            return Err(Error::arg(format!(
                "estimated memory {:.2} GiB at n = {n} exceeds 4 GiB",
                bytes / MEMORY_LIMIT_BYTES * 4.0
            )));
        }
        Ok(())
    }
}
