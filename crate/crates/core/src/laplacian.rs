//! Graph Laplacians in the unnormalized, random-walk and symmetric normalizations.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{degrees, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaplacianKind {
    #[serde(alias = "un")]
    Unnormalized,
    #[serde(alias = "rw", alias = "random-walk")]
    RandomWalk,
    #[serde(alias = "sym")]
    Symmetric,
}

impl LaplacianKind {
    pub fn short_name(self) -> &'static str {
        match self {
            LaplacianKind::Unnormalized => "un",
            LaplacianKind::RandomWalk => "rw",
            LaplacianKind::Symmetric => "sym",
        }
    }
}

impl fmt::Display for LaplacianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for LaplacianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "un" | "unnormalized" => Ok(LaplacianKind::Unnormalized),
            "rw" | "randomwalk" | "random-walk" => Ok(LaplacianKind::RandomWalk),
            "sym" | "symmetric" => Ok(LaplacianKind::Symmetric),
            _ => Err(Error::arg(format!("unknown Laplacian kind {s:?}"))),
        }
    }
}

/// A graph Laplacian `2/(σ h²) Σ_j w_ij (...)` bound to its graph.
#[derive(Debug, Clone)]
pub struct LaplacianOperator<'g> {
    pub kind: LaplacianKind,
    pub graph: &'g WeightedGraph,
    pub degrees: Vec<f64>,
    pub scale: f64,
    inv_sqrt_deg: Vec<f64>,
}

pub fn assemble(graph: &WeightedGraph, kind: LaplacianKind) -> Result<LaplacianOperator<'_>> {
    let deg = degrees(graph);
    if kind != LaplacianKind::Unnormalized {
        let isolated: Vec<usize> = (0..graph.n).filter(|&i| deg[i] <= 0.0).collect();
        if !isolated.is_empty() {
            return Err(Error::IsolatedVertices { vertices: isolated });
        }
    }
    let inv_sqrt_deg = deg
        .iter()
        .map(|&m| if m > 0.0 { 1.0 / m.sqrt() } else { 0.0 })
        .collect();
    Ok(LaplacianOperator {
        kind,
        graph,
        scale: 2.0 / (graph.kernel.sigma * graph.h * graph.h),
        degrees: deg,
        inv_sqrt_deg,
    })
}

impl LaplacianOperator<'_> {
    pub fn n(&self) -> usize {
        self.graph.n
    }

    /// The symmetric normalization on the same graph.
    pub fn to_symmetric(&self) -> Self {
        LaplacianOperator {
            kind: LaplacianKind::Symmetric,
            ..self.clone()
        }
    }

    /// Writes `L u` into `out`. Each row accumulates in ascending column order.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        assert_eq!(u.len(), self.n());
        assert_eq!(out.len(), self.n());
        out.par_iter_mut()
            .enumerate()
            .for_each(|(i, o)| *o = self.apply_row(i, u));
    }

    pub fn matvec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.apply(u, &mut out);
        out
    }

    fn apply_row(&self, i: usize, u: &[f64]) -> f64 {
        let (cols, vals) = self.graph.row(i);
        let mut acc = 0.0;
        match self.kind {
            LaplacianKind::Unnormalized => {
                for (&j, &w) in cols.iter().zip(vals) {
                    acc += w * (u[i] - u[j as usize]);
                }
            }
            LaplacianKind::RandomWalk => {
                for (&j, &w) in cols.iter().zip(vals) {
                    acc += w * (u[i] - u[j as usize]);
                }
                acc /= self.degrees[i];
            }
            LaplacianKind::Symmetric => {
                let si = self.inv_sqrt_deg[i];
                for (&j, &w) in cols.iter().zip(vals) {
                    let sj = self.inv_sqrt_deg[j as usize];
                    acc += w * si * (u[i] * si - u[j as usize] * sj);
                }
            }
        }
        self.scale * acc
    }

    /// Explicit entries of the operator matrix as sorted `(i, j, value)` triplets.
    pub fn to_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.graph.nnz() + self.n());
        for i in 0..self.n() {
            let (cols, vals) = self.graph.row(i);
            let off_sum: f64 = cols
                .iter()
                .zip(vals)
                .filter(|(&j, _)| j as usize != i)
                .map(|(_, &w)| w)
                .sum();
            let mut diag_done = false;
            let push_diag = |out: &mut Vec<(usize, usize, f64)>| {
                let d = match self.kind {
                    LaplacianKind::Unnormalized => off_sum,
                    LaplacianKind::RandomWalk => off_sum / self.degrees[i],
                    LaplacianKind::Symmetric => off_sum / self.degrees[i],
                };
                out.push((i, i, self.scale * d));
            };
            for (&j, &w) in cols.iter().zip(vals) {
                let j = j as usize;
                if j == i {
                    continue;
                }
                if j > i && !diag_done {
                    push_diag(&mut out);
                    diag_done = true;
                }
                let v = match self.kind {
                    LaplacianKind::Unnormalized => -w,
                    LaplacianKind::RandomWalk => -w / self.degrees[i],
                    LaplacianKind::Symmetric => -w * self.inv_sqrt_deg[i] * self.inv_sqrt_deg[j],
                };
                out.push((i, j, self.scale * v));
            }
            if !diag_done {
                push_diag(&mut out);
            }
        }
        out
    }

    /// Dense row-major matrix of the operator, for small graphs.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut a = vec![0.0; n * n];
        for (i, j, v) in self.to_triplets() {
            a[i * n + j] = v;
        }
        a
    }

    /// Vertex weights of the inner product in which the operator is self-adjoint:
    /// `1/n` (unnormalized), `m_i/n` (random-walk), `1` (symmetric).
    pub fn inner_product_weights(&self) -> Vec<f64> {
        let n = self.n() as f64;
        match self.kind {
            LaplacianKind::Unnormalized => vec![1.0 / n; self.n()],
            LaplacianKind::RandomWalk => self.degrees.iter().map(|m| m / n).collect(),
            LaplacianKind::Symmetric => vec![1.0; self.n()],
        }
    }

    /// The vector annihilated by the operator on each connected component.
    pub fn null_direction(&self) -> Vec<f64> {
        match self.kind {
            LaplacianKind::Symmetric => self.degrees.iter().map(|m| m.sqrt()).collect(),
            _ => vec![1.0; self.n()],
        }
    }

    /// `⟨L u, u⟩` in the operator's natural inner product.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let lu = self.matvec(u);
        let w = self.inner_product_weights();
        lu.iter().zip(u).zip(&w).map(|((a, b), c)| a * b * c).sum()
    }
}

/// Discrete Dirichlet form `b(u) = (1/(nσ)) Σ_{(i,j)} w_ij ((u_j - u_i)/h)²`
/// over ordered pairs.
pub fn dirichlet_b(graph: &WeightedGraph, u: &[f64]) -> Result<f64> {
    if u.len() != graph.n {
        return Err(Error::arg(format!(
            "vertex function has {} entries, graph has {} vertices",
            u.len(),
            graph.n
        )));
    }
    let h2 = graph.h * graph.h;
    let total: f64 = (0..graph.n)
        .into_par_iter()
        .map(|i| {
            let (cols, vals) = graph.row(i);
            cols.iter()
                .zip(vals)
                .map(|(&j, &w)| {
                    let d = u[j as usize] - u[i];
                    w * d * d / h2
                })
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(total / (graph.n as f64 * graph.kernel.sigma))
}
