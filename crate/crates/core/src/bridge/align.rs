use serde::{Deserialize, Serialize};

use super::field::{inner, ContinuumField};
use crate::eigen::dense::symmetric_eigen;
use crate::error::{Error, Result};
use crate::geometry::{PointCloud, SpectrumTable};

const MAX_GRAM_CONDITION: f64 = 1e8;

/// Distance from a field to one continuum eigenspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub lambda_discrete: Option<f64>,
    pub lambda_continuum: f64,
    pub cluster: usize,
    /// `‖g − Πg‖ / ‖g‖`.
    pub subspace_error: f64,
    pub gap: f64,
    /// `Πg / ‖Πg‖` at the quadrature points.
    #[serde(skip)]
    pub matched: Vec<f64>,
}

impl AlignmentReport {
    pub fn with_discrete(mut self, lambda: f64) -> Self {
        self.lambda_discrete = Some(lambda);
        self
    }
}

/// Projects `g` onto the eigenspace of table entry `entry`, orthonormalized
/// in the quadrature inner product of `g`.
pub fn align_eigenspace(
    g: &ContinuumField,
    table: &SpectrumTable,
    entry: usize,
    quadrature: &PointCloud,
) -> Result<AlignmentReport> {
    let Some(e) = table.entries.get(entry) else {
        return Err(Error::arg(format!(
            "table has {} entries, asked for {entry}",
            table.entries.len()
        )));
    };
    if g.len() != quadrature.len() {
        return Err(Error::arg("field and quadrature sizes differ"));
    }
    let gnorm = g.norm();
    if !(gnorm >= 1e-14) {
        return Err(Error::arg(format!("field norm {gnorm:e} is too small to align")));
    }
    let man = &quadrature.manifold;
    let rho = &g.rho;
    let mut basis: Vec<Vec<f64>> = e
        .functions
        .iter()
        .map(|f| quadrature.iter().map(|x| f.value(man, x)).collect())
        .collect();

    let k = basis.len();
    let mut gram = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..=a {
            let v = inner(&basis[a], &basis[b], rho);
            gram[a * k + b] = v;
            gram[b * k + a] = v;
        }
    }
    let (vals, _) = symmetric_eigen(&gram, k);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(0.0, f64::max);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > MAX_GRAM_CONDITION {
        return Err(Error::QuadratureTooCoarse { condition });
    }

    // modified Gram-Schmidt, two passes
    for a in 0..k {
        for _ in 0..2 {
            for b in 0..a {
                let c = inner(&basis[a], &basis[b], rho);
                let (head, tail) = basis.split_at_mut(a);
                tail[0].iter_mut().zip(&head[b]).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nrm = inner(&basis[a], &basis[a], rho).sqrt();
        basis[a].iter_mut().for_each(|x| *x /= nrm);
    }

    let mut proj = vec![0.0; g.len()];
    for q in &basis {
        let c = inner(&g.values, q, rho);
        proj.iter_mut().zip(q).for_each(|(p, v)| *p += c * v);
    }
    let resid: Vec<f64> = g.values.iter().zip(&proj).map(|(a, b)| a - b).collect();
    let subspace_error = (inner(&resid, &resid, rho).sqrt() / gnorm).clamp(0.0, 1.0);
    let pnorm = inner(&proj, &proj, rho).sqrt();
    let matched = if pnorm > 0.0 {
        proj.iter().map(|v| v / pnorm).collect()
    } else {
        proj
    };
    Ok(AlignmentReport {
        lambda_discrete: None,
        lambda_continuum: e.eigenvalue,
        cluster: e.multiplicity,
        subspace_error,
        gap: table.gap(entry),
        matched,
    })
}
