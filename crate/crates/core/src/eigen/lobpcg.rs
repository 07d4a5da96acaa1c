//! Locally optimal block preconditioned conjugate gradient for the smallest
//! eigenpairs of `A x = λ B x` with diagonal `B`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dense::symmetric_eigen;

const INIT_SEED: u64 = 0x10b9_c6;
/// Tracked `A·X` is refreshed by explicit products this often.
const REFRESH_EVERY: usize = 10;
const DROP_TOL: f64 = 1e-10;

pub(crate) struct Problem<'a> {
    pub n: usize,
    pub apply: &'a (dyn Fn(&[f64], &mut [f64]) + Sync),
    pub diag: &'a [f64],
    /// Diagonal of `B`.
    pub b: &'a [f64],
    /// B-orthonormal vectors spanning the known null space.
    pub deflate: &'a [Vec<f64>],
}

pub(crate) struct Outcome {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl Problem<'_> {
    fn a(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        (self.apply)(x, &mut out);
        out
    }

    fn dot_b(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).zip(self.b).map(|((a, c), w)| a * c * w).sum()
    }

    fn project_out_null(&self, x: &mut [f64]) {
        for z in self.deflate {
            let c = self.dot_b(z, x);
            axpy(-c, z, x);
        }
    }

    /// `‖Ax − λBx‖ / (‖Ax‖ + |λ|‖Bx‖)` in the Euclidean norm.
    pub fn relative_residual(&self, x: &[f64], ax: &[f64], lam: f64) -> f64 {
        let mut r2 = 0.0;
        let mut a2 = 0.0;
        let mut b2 = 0.0;
        for i in 0..self.n {
            let bx = self.b[i] * x[i];
            let r = ax[i] - lam * bx;
            r2 += r * r;
            a2 += ax[i] * ax[i];
            b2 += bx * bx;
        }
        let denom = a2.sqrt() + lam.abs() * b2.sqrt();
        if denom == 0.0 {
            0.0
        } else {
            r2.sqrt() / denom
        }
    }
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(b, a)| *b += alpha * a);
}

fn combine(basis: &[Vec<f64>], coef: impl Fn(usize) -> f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (i, v) in basis.iter().enumerate() {
        let c = coef(i);
        if c != 0.0 {
            axpy(c, v, &mut out);
        }
    }
    out
}

/// B-orthonormalizes `vecs` in place (two Gram–Schmidt passes against the
/// deflated space and earlier vectors), applying the same combinations to
/// the paired `images`. Vectors that become numerically dependent are dropped.
fn orthonormalize(p: &Problem, vecs: &mut Vec<Vec<f64>>, images: &mut Vec<Vec<f64>>) {
    let mut out_v: Vec<Vec<f64>> = Vec::with_capacity(vecs.len());
    let mut out_a: Vec<Vec<f64>> = Vec::with_capacity(vecs.len());
    for (mut v, mut av) in vecs.drain(..).zip(images.drain(..)) {
        let before = p.dot_b(&v, &v).sqrt();
        if before == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for z in p.deflate {
                // null vectors satisfy A z = 0, so the image needs no update
                let c = p.dot_b(z, &v);
                axpy(-c, z, &mut v);
            }
            for (q, aq) in out_v.iter().zip(&out_a) {
                let c = p.dot_b(q, &v);
                axpy(-c, q, &mut v);
                axpy(-c, aq, &mut av);
            }
        }
        let after = p.dot_b(&v, &v).sqrt();
        if after <= DROP_TOL * before {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= after);
        av.iter_mut().for_each(|x| *x /= after);
        out_v.push(v);
        out_a.push(av);
    }
    *vecs = out_v;
    *images = out_a;
}

/// Rayleigh–Ritz on a B-orthonormal basis with known images; `Sᵀ A S` alone
/// is the projected pencil.
fn rayleigh_ritz(s: &[Vec<f64>], as_: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let k = s.len();
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let a: f64 = s[i].iter().zip(&as_[j]).map(|(x, y)| x * y).sum();
            let b: f64 = s[j].iter().zip(&as_[i]).map(|(x, y)| x * y).sum();
            g[i * k + j] = 0.5 * (a + b);
            g[j * k + i] = g[i * k + j];
        }
    }
    symmetric_eigen(&g, k)
}

pub(crate) fn solve(p: &Problem, nev: usize, block: usize, tol: f64, max_iter: usize) -> Outcome {
    let n = p.n;
    let mut rng = ChaCha8Rng::seed_from_u64(INIT_SEED);
    let mut x: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    for v in x.iter_mut() {
        p.project_out_null(v);
    }
    let mut ax: Vec<Vec<f64>> = x.iter().map(|v| p.a(v)).collect();
    orthonormalize(p, &mut x, &mut ax);
    ax = x.iter().map(|v| p.a(v)).collect();

    let (vals, c) = rayleigh_ritz(&x, &ax);
    let bs = x.len();
    let mut lam: Vec<f64> = vals[..bs].to_vec();
    let rotate = |basis: &[Vec<f64>], c: &[f64], width: usize, col: usize| {
        combine(basis, |i| c[i * width + col], n)
    };
    let (nx, nax): (Vec<_>, Vec<_>) = (0..bs)
        .map(|j| (rotate(&x, &c, bs, j), rotate(&ax, &c, bs, j)))
        .unzip();
    x = nx;
    ax = nax;

    let mut pdir: Vec<Vec<f64>> = Vec::new();
    let mut apdir: Vec<Vec<f64>> = Vec::new();
    let mut pcols: Vec<usize> = Vec::new();
    let mut iterations = 0;
    let mut residuals = vec![f64::INFINITY; bs];

    while iterations < max_iter {
        for j in 0..bs {
            residuals[j] = p.relative_residual(&x[j], &ax[j], lam[j]);
        }
        let want = nev.min(bs);
        if residuals[..want].iter().all(|&r| r <= tol) {
            // confirm against exact products before stopping
            ax = x.iter().map(|v| p.a(v)).collect();
            for j in 0..bs {
                residuals[j] = p.relative_residual(&x[j], &ax[j], lam[j]);
            }
            if residuals[..want].iter().all(|&r| r <= tol) {
                break;
            }
        }
        iterations += 1;

        let active: Vec<usize> = (0..bs).filter(|&j| residuals[j] > tol).collect();
        let mut w: Vec<Vec<f64>> = active
            .iter()
            .map(|&j| {
                let mut r: Vec<f64> = (0..n)
                    .map(|i| ax[j][i] - lam[j] * p.b[i] * x[j][i])
                    .collect();
                for i in 0..n {
                    let d = p.diag[i];
                    if d > 0.0 {
                        r[i] /= d;
                    }
                }
                p.project_out_null(&mut r);
                r
            })
            .collect();
        let mut aw: Vec<Vec<f64>> = w.iter().map(|v| p.a(v)).collect();

        // basis [X, W, P], B-orthonormalized as a whole
        let mut s: Vec<Vec<f64>> = Vec::with_capacity(bs + 2 * active.len());
        let mut as_: Vec<Vec<f64>> = Vec::with_capacity(s.capacity());
        s.append(&mut x);
        as_.append(&mut ax);
        let keep_p: Vec<usize> = pcols
            .iter()
            .enumerate()
            .filter(|(_, c)| active.contains(c))
            .map(|(i, _)| i)
            .collect();
        s.append(&mut w);
        as_.append(&mut aw);
        for &i in &keep_p {
            s.push(std::mem::take(&mut pdir[i]));
            as_.push(std::mem::take(&mut apdir[i]));
        }
        orthonormalize(p, &mut s, &mut as_);

        let (vals, c) = rayleigh_ritz(&s, &as_);
        let width = s.len();
        let take = bs.min(width);
        lam = vals[..take].to_vec();
        // the first `take` orthonormalized vectors descend from X
        let head = take;
        x = Vec::with_capacity(take);
        ax = Vec::with_capacity(take);
        pdir = Vec::new();
        apdir = Vec::new();
        pcols = Vec::new();
        for j in 0..take {
            x.push(rotate(&s, &c, width, j));
            ax.push(rotate(&as_, &c, width, j));
            if active.contains(&j) && width > head {
                let coef = |i: usize| if i >= head { c[i * width + j] } else { 0.0 };
                pdir.push(combine(&s, coef, n));
                apdir.push(combine(&as_, coef, n));
                pcols.push(j);
            }
        }
        if x.len() < bs {
            // the search space collapsed below the block size
            break;
        }
        if iterations % REFRESH_EVERY == 0 {
            ax = x.iter().map(|v| p.a(v)).collect();
        }
    }
    finish(p, x, lam, iterations, nev)
}

fn finish(p: &Problem, x: Vec<Vec<f64>>, lam: Vec<f64>, iterations: usize, nev: usize) -> Outcome {
    let take = nev.min(x.len());
    let vectors: Vec<Vec<f64>> = x.into_iter().take(take).collect();
    let values: Vec<f64> = lam.into_iter().take(take).collect();
    let residuals = vectors
        .iter()
        .zip(&values)
        .map(|(v, &l)| p.relative_residual(v, &p.a(v), l))
        .collect();
    Outcome {
        values,
        vectors,
        residuals,
        iterations,
    }
}
