//! Smallest eigenpairs of graph Laplacians, with a dense oracle.

pub(crate) mod dense;
mod lobpcg;

use std::io::{BufWriter, Read, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplacian::{LaplacianKind, LaplacianOperator};

pub(crate) use dense::symmetric_eigen;

pub const VECTORS_MAGIC: &[u8; 4] = b"MSEV";
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 500;
/// Graphs at most this large are solved densely, for any `k <= n`.
pub const DENSE_CUTOFF: usize = 64;
const SYMMETRY_TOL: f64 = 1e-12;
const CLUSTER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerProduct {
    Euclidean,
    DiagonalWeights,
}

/// Ascending eigenvalues with B-orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    /// One vector of length n per eigenvalue.
    pub vectors: Vec<Vec<f64>>,
    pub inner_product: InnerProduct,
    /// Diagonal of `B`; all ones for the Euclidean product.
    pub weights: Vec<f64>,
    /// Relative residuals `‖Av − λBv‖ / (‖Av‖ + |λ|‖Bv‖)` of the problem solved.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// Every requested pair met the tolerance.
    pub converged: bool,
    /// Multiplicity of the zero eigenvalue (number of connected components);
    /// zero for matrices not coming from a graph.
    pub zero_multiplicity: usize,
}

#[derive(Serialize)]
struct EigenSummary<'a> {
    eigenvalues: &'a [f64],
    residuals: &'a [f64],
    iterations: usize,
    inner_product: InnerProduct,
    vectors_file: &'a str,
    converged: bool,
    zero_multiplicity: usize,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Length of the prefix of pairs whose residual meets `tol`.
    pub fn converged_prefix(&self, tol: f64) -> usize {
        self.residuals.iter().take_while(|&&r| r <= tol).count()
    }

    /// Index ranges of numerically degenerate eigenvalues: neighbors closer
    /// than `1e-8 · λ_max` share a range.
    pub fn clusters(&self) -> Vec<Range<usize>> {
        let lmax = self.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.len() {
            if i == self.len() || self.eigenvalues[i] - self.eigenvalues[i - 1] > CLUSTER_TOL * lmax {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    /// B inner product of two vertex functions.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.weights).map(|((a, b), w)| a * b * w).sum()
    }

    /// JSON summary; the vectors themselves go to `vectors_file`.
    pub fn write_json<W: Write>(&self, out: W, vectors_file: &str) -> Result<()> {
        let summary = EigenSummary {
            eigenvalues: &self.eigenvalues,
            residuals: &self.residuals,
            iterations: self.iterations,
            inner_product: self.inner_product,
            vectors_file,
            converged: self.converged,
            zero_multiplicity: self.zero_multiplicity,
        };
        serde_json::to_writer_pretty(out, &summary)?;
        Ok(())
    }

    /// Binary matrix: magic, rows and columns as u64, then the vectors one
    /// after another as little-endian f64.
    pub fn write_vectors<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        let rows = self.vectors.first().map_or(0, Vec::len);
        out.write_all(VECTORS_MAGIC)?;
        out.write_all(&(rows as u64).to_le_bytes())?;
        out.write_all(&(self.vectors.len() as u64).to_le_bytes())?;
        for v in &self.vectors {
            for x in v {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads a matrix written by [`EigenResult::write_vectors`].
pub fn read_vectors<R: Read>(mut input: R) -> Result<Vec<Vec<f64>>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != VECTORS_MAGIC {
        return Err(Error::Format("not an eigenvector file".into()));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let mut out = Vec::with_capacity(cols);
    for _ in 0..cols {
        let mut v = Vec::with_capacity(rows);
        for _ in 0..rows {
            input.read_exact(&mut word)?;
            v.push(f64::from_le_bytes(word));
        }
        out.push(v);
    }
    Ok(out)
}

/// Full spectrum of a dense symmetric `n × n` matrix (row-major), optionally
/// of the pencil `(A, diag(b))`.
pub fn dense_sym_eig(a: &[f64], n: usize, b: Option<&[f64]>) -> Result<EigenResult> {
    if a.len() != n * n {
        return Err(Error::arg(format!("matrix has {} entries, expected {n}²", a.len())));
    }
    let scale = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let asym = dense::asymmetry(a, n);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::arg(format!("matrix is not symmetric (asymmetry {asym:.3e})")));
    }
    let weights = match b {
        Some(b) => {
            if b.len() != n || b.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::arg("B must be a positive diagonal of length n"));
            }
            b.to_vec()
        }
        None => vec![1.0; n],
    };
    let inv_sqrt: Vec<f64> = weights.iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let aij = 0.5 * (a[i * n + j] + a[j * n + i]);
            c[i * n + j] = inv_sqrt[i] * aij * inv_sqrt[j];
        }
    }
    let (vals, z) = symmetric_eigen(&c, n);
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|col| (0..n).map(|r| z[r * n + col] * inv_sqrt[r]).collect())
        .collect();
    let residuals = vectors
        .iter()
        .zip(&vals)
        .map(|(v, &l)| dense_residual(a, n, &weights, v, l))
        .collect();
    Ok(EigenResult {
        eigenvalues: vals,
        vectors,
        inner_product: if b.is_some() {
            InnerProduct::DiagonalWeights
        } else {
            InnerProduct::Euclidean
        },
        weights,
        residuals,
        iterations: 0,
        converged: true,
        zero_multiplicity: 0,
    })
}

fn dense_residual(a: &[f64], n: usize, b: &[f64], v: &[f64], lam: f64) -> f64 {
    let (mut r2, mut a2, mut b2) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let av: f64 = (0..n).map(|j| a[i * n + j] * v[j]).sum();
        let bv = b[i] * v[i];
        r2 += (av - lam * bv).powi(2);
        a2 += av * av;
        b2 += bv * bv;
    }
    let denom = a2.sqrt() + lam.abs() * b2.sqrt();
    if denom == 0.0 {
        0.0
    } else {
        r2.sqrt() / denom
    }
}

/// The symmetric pencil actually handed to a solver for a given Laplacian.
struct Realization {
    /// Operator applied to a vector (symmetric in the Euclidean sense).
    kind: LaplacianKind,
    scale_a: f64,
    b: Vec<f64>,
    diag: Vec<f64>,
}

fn realize(op: &LaplacianOperator) -> Realization {
    let n = op.n();
    let nf = n as f64;
    let diag_l: Vec<f64> = (0..n)
        .map(|i| {
            let wii = op.graph.weight(i, i);
            match op.kind {
                LaplacianKind::Unnormalized => op.scale * (op.degrees[i] - wii),
                _ => op.scale * (1.0 - wii / op.degrees[i]),
            }
        })
        .collect();
    match op.kind {
        // (L/n) v = λ (1/n) v
        LaplacianKind::Unnormalized => Realization {
            kind: LaplacianKind::Unnormalized,
            scale_a: 1.0 / nf,
            b: vec![1.0 / nf; n],
            diag: diag_l.iter().map(|d| d / nf).collect(),
        },
        // random-walk is solved through its symmetric similarity
        LaplacianKind::RandomWalk | LaplacianKind::Symmetric => Realization {
            kind: LaplacianKind::Symmetric,
            scale_a: 1.0,
            b: vec![1.0; n],
            diag: diag_l,
        },
    }
}

/// The `k` smallest eigenpairs of a graph Laplacian.
///
/// Unnormalized operators are solved as the pencil `(L/n, I/n)`, so vectors
/// are orthonormal under the `1/n` counting weights. Random-walk operators go
/// through the symmetric form and are back-transformed by `v = m^{-1/2} u`,
/// normalized under the weights `m_i/n`. The zero eigenvalue is deflated
/// exactly, once per connected component.
pub fn smallest_k(op: &LaplacianOperator, k: usize, tol: f64, max_iter: usize) -> Result<EigenResult> {
    let n = op.n();
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(Error::arg(format!("tolerance must be positive, got {tol}")));
    }
    if n <= DENSE_CUTOFF {
        if k > n {
            return Err(Error::arg(format!("k = {k} exceeds n = {n}")));
        }
    } else if 4 * k > n {
        return Err(Error::arg(format!("k = {k} exceeds n/4 for n = {n}")));
    }
    let real = realize(op);
    let sym_op;
    let apply_op = match real.kind {
        LaplacianKind::Unnormalized => op,
        _ => {
            sym_op = op.to_symmetric();
            &sym_op
        }
    };

    let (ncomp, label) = op.graph.components();
    // B-orthonormal null vectors of the realization, one per component
    let dir = apply_op.null_direction();
    let null: Vec<Vec<f64>> = (0..ncomp)
        .map(|c| {
            let mut z: Vec<f64> = (0..n).map(|i| if label[i] == c { dir[i] } else { 0.0 }).collect();
            let nrm: f64 = z.iter().zip(&real.b).map(|(a, w)| a * a * w).sum::<f64>().sqrt();
            z.iter_mut().for_each(|x| *x /= nrm);
            z
        })
        .collect();

    let (mut values, mut vectors, mut residuals, iterations, converged);
    if n <= DENSE_CUTOFF {
        let mut a = apply_op.to_dense();
        a.iter_mut().for_each(|x| *x *= real.scale_a);
        let full = dense_sym_eig(&a, n, Some(&real.b))?;
        values = vec![0.0; ncomp.min(k)];
        vectors = null.iter().take(k).cloned().collect::<Vec<_>>();
        residuals = vec![0.0; values.len()];
        for j in ncomp..k {
            values.push(full.eigenvalues[j]);
            vectors.push(full.vectors[j].clone());
            residuals.push(full.residuals[j]);
        }
        iterations = 0;
        converged = true;
    } else {
        values = vec![0.0; ncomp.min(k)];
        vectors = null.iter().take(k).cloned().collect::<Vec<_>>();
        residuals = vec![0.0; values.len()];
        if k > ncomp {
            let nev = k - ncomp;
            let block = (nev + 5).min(n - ncomp);
            let apply = |x: &[f64], out: &mut [f64]| {
                apply_op.apply(x, out);
                if real.scale_a != 1.0 {
                    out.iter_mut().for_each(|v| *v *= real.scale_a);
                }
            };
            let problem = lobpcg::Problem {
                n,
                apply: &apply,
                diag: &real.diag,
                b: &real.b,
                deflate: &null,
            };
            let out = lobpcg::solve(&problem, nev, block, tol, max_iter);
            converged = out.values.len() == nev && out.residuals.iter().all(|&r| r <= tol);
            values.extend(out.values);
            vectors.extend(out.vectors);
            residuals.extend(out.residuals);
            iterations = out.iterations;
        } else {
            iterations = 0;
            converged = true;
        }
    }

    let nf = n as f64;
    let (inner_product, weights) = match op.kind {
        LaplacianKind::Unnormalized => (InnerProduct::DiagonalWeights, real.b.clone()),
        LaplacianKind::Symmetric => (InnerProduct::Euclidean, vec![1.0; n]),
        LaplacianKind::RandomWalk => {
            for v in vectors.iter_mut() {
                for (x, m) in v.iter_mut().zip(&op.degrees) {
                    *x *= (nf / m).sqrt();
                }
            }
            (
                InnerProduct::DiagonalWeights,
                op.degrees.iter().map(|m| m / nf).collect(),
            )
        }
    };
    // fixed sign convention: largest-magnitude entry positive
    for v in vectors.iter_mut() {
        let big = v.iter().fold(0.0f64, |a, &b| if b.abs() > a.abs() { b } else { a });
        if big < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(EigenResult {
        eigenvalues: values,
        vectors,
        inner_product,
        weights,
        residuals,
        iterations,
        converged,
        zero_multiplicity: ncomp,
    })
}
