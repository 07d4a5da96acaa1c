//! Fourier–Galerkin spectrum of `−(1/(ρp)) div(p² ∇f)` on the flat torus for
//! densities varying along one axis.
//!
//! With `p = p(θ_a)` the problem separates: for every transverse wavevector
//! `k'`, functions `g(θ_a) e^{2πi k'·θ'}` form an invariant block whose 1-D
//! Galerkin pencil is `∫ p²(g'h' + 4π²|k'|² g h)` against `∫ ρ p g h`.

use std::f64::consts::PI;

use super::field::Rho;
use crate::eigen::dense::generalized_eigen;
use crate::error::{Error, Result};
use crate::geometry::{
    DensityForm, DensitySpec, Eigenfunction, FourierTerm, ManifoldKind, ManifoldSpec, SpectrumEntry,
    SpectrumTable,
};

pub const ORACLE_START_CUTOFF: usize = 16;
const MAX_CUTOFF: usize = 128;
const SELF_CONSISTENT: f64 = 1e-3;
const ACCEPTABLE: f64 = 1e-2;
const CLUSTER_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Mode {
    lambda: f64,
    transverse: Vec<i64>,
    /// Coefficients on `{1, cos 2πθ, sin 2πθ, cos 4πθ, ...}` along the axis.
    coeffs: Vec<f64>,
    /// Transverse phase: cos for `false`, sin for `true`.
    sine: bool,
}

/// Smallest `count` eigenvalues (plus the next distinct level) of the limit
/// operator on the torus, with eigenfunctions as Fourier series.
pub fn continuum_oracle_spectrum(
    manifold: &ManifoldSpec,
    density: &DensitySpec,
    rho: Rho,
    count: usize,
) -> Result<SpectrumTable> {
    if manifold.kind != ManifoldKind::Torus {
        return Err(Error::Unsupported("the Galerkin oracle covers the flat torus only".into()));
    }
    let (amp, axis) = match density.form {
        DensityForm::Uniform => (0.0, 0),
        DensityForm::TorusCosine { amplitude, axis } => (amplitude, axis),
        DensityForm::SphereTilt { .. } => {
            return Err(Error::Unsupported("sphere densities have no torus oracle".into()))
        }
    };
    let count = count.max(1);
    let mut cutoff = ORACLE_START_CUTOFF;
    let mut prev = solve(manifold.m, amp, rho, count, cutoff);
    loop {
        cutoff *= 2;
        let next = solve(manifold.m, amp, rho, count, cutoff);
        let change = relative_change(&prev, &next, count);
        let done = change <= SELF_CONSISTENT || cutoff >= MAX_CUTOFF;
        if done {
            if change > ACCEPTABLE {
                return Err(Error::OracleNotConverged { change });
            }
            return Ok(table(manifold.m, axis, rho, next));
        }
        prev = next;
    }
}

fn relative_change(a: &[Mode], b: &[Mode], count: usize) -> f64 {
    a.iter()
        .zip(b)
        .take(count + 1)
        .map(|(x, y)| (x.lambda - y.lambda).abs() / y.lambda.abs().max(1e-12))
        .filter(|c| c.is_finite())
        .fold(0.0, f64::max)
}

/// Sorted modes covering `count` eigenvalues and the next distinct level.
fn solve(m: usize, amp: f64, rho: Rho, count: usize, cutoff: usize) -> Vec<Mode> {
    let floor = match rho {
        Rho::One => 1.0 - amp.abs(),
        Rho::Density => 1.0,
    };
    let mut shells = transverse_shells(m - 1, cutoff as i64);
    shells.sort_by_key(|(s, _)| *s);
    let mut modes: Vec<Mode> = Vec::new();
    for (s, vectors) in shells {
        let bound = 4.0 * PI * PI * s as f64 * floor;
        if let Some(cut) = coverage_level(&modes, count) {
            if bound > cut * (1.0 + 1e-9) {
                break;
            }
        }
        for k in vectors {
            let (vals, vecs) = block(amp, rho, s as f64, cutoff);
            let size = vals.len();
            let phases: &[bool] = if s == 0 { &[false] } else { &[false, true] };
            for (j, &lambda) in vals.iter().enumerate() {
                let coeffs: Vec<f64> = (0..size).map(|i| vecs[i * size + j]).collect();
                for &sine in phases {
                    modes.push(Mode {
                        lambda,
                        transverse: k.clone(),
                        coeffs: coeffs.clone(),
                        sine,
                    });
                }
            }
        }
        modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    }
    let keep = coverage_len(&modes, count);
    modes.truncate(keep);
    modes
}

fn same_level(a: f64, b: f64) -> bool {
    (a - b).abs() <= CLUSTER_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Eigenvalue of the first level strictly above the `count`-th mode.
fn coverage_level(modes: &[Mode], count: usize) -> Option<f64> {
    let last = modes.get(count - 1)?.lambda;
    modes.iter().map(|m| m.lambda).find(|&l| l > last && !same_level(l, last))
}

fn coverage_len(modes: &[Mode], count: usize) -> usize {
    match coverage_level(modes, count) {
        Some(level) => modes.iter().take_while(|m| m.lambda <= level || same_level(m.lambda, level)).count(),
        None => modes.len(),
    }
}

/// Transverse wavevectors with `|k'|_∞ <= cutoff`, one per `±` pair, grouped
/// by `|k'|²`.
fn transverse_shells(dim: usize, cutoff: i64) -> Vec<(i64, Vec<Vec<i64>>)> {
    let mut by_norm: std::collections::BTreeMap<i64, Vec<Vec<i64>>> = Default::default();
    if dim == 0 {
        by_norm.insert(0, vec![Vec::new()]);
        return by_norm.into_iter().collect();
    }
    let mut k = vec![-cutoff; dim];
    loop {
        let canonical = match k.iter().find(|&&v| v != 0) {
            None => true,
            Some(&v) => v > 0,
        };
        if canonical {
            let s = k.iter().map(|v| v * v).sum();
            by_norm.entry(s).or_default().push(k.clone());
        }
        let mut i = 0;
        while i < dim {
            k[i] += 1;
            if k[i] > cutoff {
                k[i] = -cutoff;
                i += 1;
            } else {
                break;
            }
        }
        if i == dim {
            break;
        }
    }
    by_norm.into_iter().collect()
}

/// 1-D pencil for transverse frequency `|k'|² = s`.
fn block(amp: f64, rho: Rho, s: f64, cutoff: usize) -> (Vec<f64>, Vec<f64>) {
    let size = 2 * cutoff + 1;
    // the trapezoid rule is exact for trigonometric integrands of degree < grid
    let grid = 4 * cutoff + 8;
    let c = 4.0 * PI * PI * s;
    let mut stiff = vec![0.0; size * size];
    let mut mass = vec![0.0; size * size];
    let mut phi = vec![0.0; size];
    let mut dphi = vec![0.0; size];
    for g in 0..grid {
        let t = g as f64 / grid as f64;
        let p = 1.0 + amp * (2.0 * PI * t).cos();
        let w = match rho {
            Rho::One => p,
            Rho::Density => p * p,
        };
        phi[0] = 1.0;
        dphi[0] = 0.0;
        for j in 1..=cutoff {
            let f = 2.0 * PI * j as f64;
            let (sn, cs) = (f * t).sin_cos();
            phi[2 * j - 1] = cs;
            phi[2 * j] = sn;
            dphi[2 * j - 1] = -f * sn;
            dphi[2 * j] = f * cs;
        }
        let p2 = p * p;
        for a in 0..size {
            for b in 0..=a {
                stiff[a * size + b] += p2 * (dphi[a] * dphi[b] + c * phi[a] * phi[b]);
                mass[a * size + b] += w * phi[a] * phi[b];
            }
        }
    }
    for a in 0..size {
        for b in 0..a {
            stiff[b * size + a] = stiff[a * size + b];
            mass[b * size + a] = mass[a * size + b];
        }
    }
    // the mass matrix is positive definite for 1/α <= p, so this cannot fail
    generalized_eigen(&stiff, &mass, size).expect("Galerkin mass matrix is positive definite")
}

fn table(m: usize, axis: usize, rho: Rho, modes: Vec<Mode>) -> SpectrumTable {
    let mut entries: Vec<SpectrumEntry> = Vec::new();
    for mode in modes {
        let f = eigenfunction(m, axis, &mode);
        match entries.last_mut() {
            Some(e) if same_level(e.eigenvalue, mode.lambda) => {
                e.multiplicity += 1;
                e.functions.push(f);
            }
            _ => entries.push(SpectrumEntry {
                eigenvalue: if mode.lambda.abs() < 1e-9 { 0.0 } else { mode.lambda },
                multiplicity: 1,
                functions: vec![f],
            }),
        }
    }
    SpectrumTable {
        kind: rho.kind(),
        entries,
    }
}

fn eigenfunction(m: usize, axis: usize, mode: &Mode) -> Eigenfunction {
    let transverse_zero = mode.transverse.iter().all(|&v| v == 0);
    let peak = mode.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    if mode.lambda.abs() < 1e-9 && transverse_zero {
        return Eigenfunction::Constant;
    }
    let wave = |j: i64, sign: i64| -> Vec<i64> {
        let mut w = Vec::with_capacity(m);
        let mut t = mode.transverse.iter();
        for d in 0..m {
            if d == axis {
                w.push(j);
            } else {
                w.push(sign * t.next().copied().unwrap_or(0));
            }
        }
        w
    };
    let mut terms = Vec::new();
    let cutoff = (mode.coeffs.len() - 1) / 2;
    for j in 0..=cutoff {
        let (cj, sj) = if j == 0 {
            (mode.coeffs[0], 0.0)
        } else {
            (mode.coeffs[2 * j - 1], mode.coeffs[2 * j])
        };
        if cj.abs().max(sj.abs()) <= 1e-12 * peak {
            continue;
        }
        let j = j as i64;
        if transverse_zero {
            terms.push(FourierTerm { wavevector: wave(j, 1), cos: cj, sin: sj });
        } else if !mode.sine {
            // (c cos A + s sin A) cos B
            terms.push(FourierTerm { wavevector: wave(j, 1), cos: cj / 2.0, sin: sj / 2.0 });
            terms.push(FourierTerm { wavevector: wave(j, -1), cos: cj / 2.0, sin: sj / 2.0 });
        } else {
            // (c cos A + s sin A) sin B
            terms.push(FourierTerm { wavevector: wave(j, 1), cos: -sj / 2.0, sin: cj / 2.0 });
            terms.push(FourierTerm { wavevector: wave(j, -1), cos: sj / 2.0, sin: -cj / 2.0 });
        }
    }
    Eigenfunction::TorusSeries { terms }
}
