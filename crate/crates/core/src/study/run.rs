use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::StudyConfig;
use super::fit::{fit_rate, median, RateFit};
use crate::bridge::{
    align_eigenspace, continuum_oracle_spectrum, interpolate_i_many, kde_report, voronoi_extend, Rho,
};
use crate::eigen::smallest_k;
use crate::error::{Error, Result};
use crate::geometry::{analytic_spectrum, quadrature_cloud, sample, ManifoldKind, SpectrumTable};
use crate::graph::{build_graph_with, degrees};
use crate::laplacian::{assemble, LaplacianKind};
use crate::transport::{estimate_eps, voronoi_partition, Metric};

pub const FLAG_OUT_OF_REGIME: &str = "out-of-regime";
pub const FLAG_NOT_CONVERGED: &str = "not-converged";
pub const FLAG_BUDGET: &str = "budget-exceeded";

/// One distinct continuum eigenvalue as seen by one graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub entry: usize,
    pub first_index: usize,
    pub multiplicity: usize,
    pub lambda_continuum: f64,
    /// Mean of the discrete eigenvalues in the cluster's slots.
    pub discrete_mean: Option<f64>,
    /// `|mean − λ(M)| / λ(M)`; absent for the zero eigenvalue.
    pub relative_error: Option<f64>,
    pub gap: f64,
    /// Largest alignment error of `Iu` over the cluster's discrete vectors.
    pub align_interp: Option<f64>,
    /// Same for the Voronoi extension `ū`.
    pub align_voronoi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeSummary {
    pub max_error: f64,
    pub lipschitz_term: f64,
    pub transport_term: f64,
    pub curvature_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowReport {
    pub n: usize,
    pub seed: u64,
    pub quadrature_size: usize,
    pub flags: Vec<String>,
    pub eps_hat: Option<f64>,
    pub h: Option<f64>,
    /// `h − (m+5) ε̂`.
    pub margin: Option<f64>,
    pub in_regime: bool,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    pub eigenvalues: Vec<f64>,
    pub clusters: Vec<ClusterRow>,
    pub kde: Option<KdeSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitQuantity {
    Eigenvalue,
    AlignInterp,
    AlignVoronoi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSubset {
    InRegime,
    All,
}

/// Medians over seeds for one cluster and quantity, and their log-log fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub quantity: FitQuantity,
    pub entry: usize,
    pub subset: FitSubset,
    pub medians: Vec<(usize, f64)>,
    pub strictly_decreasing: bool,
    /// Absent with fewer than two sizes or a nonpositive median.
    pub fit: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLevel {
    pub eigenvalue: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: StudyConfig,
    pub spectrum: Vec<SpectrumLevel>,
    pub rows: Vec<RowReport>,
    pub fits: Vec<FitReport>,
}

/// Wall-clock seconds per stage; kept out of the report so it stays reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RowTimings {
    pub n: usize,
    pub seed: u64,
    pub sample: f64,
    pub transport: f64,
    pub graph: f64,
    pub eigen: f64,
    pub kde: f64,
    pub align: f64,
    pub total: f64,
}

/// Continuum spectrum the study compares against, if one is available.
pub fn reference_spectrum(config: &StudyConfig) -> Result<Option<SpectrumTable>> {
    let man = config.manifold_spec()?;
    let dens = config.density_spec(&man)?;
    let count = config.study.k + 2;
    let kind = config.graph.kind;
    if dens.is_uniform() {
        return analytic_spectrum(&man, &dens, kind, count).map(Some);
    }
    match man.kind {
        ManifoldKind::Torus => continuum_oracle_spectrum(&man, &dens, Rho::for_kind(kind), count).map(Some),
        ManifoldKind::Sphere => Ok(None),
    }
}

pub fn run_study(config: &StudyConfig) -> Result<(ConvergenceReport, Vec<RowTimings>)> {
    config.validate()?;
    let table = reference_spectrum(config)?;
    let jobs: Vec<(usize, u64)> = config
        .study
        .n
        .iter()
        .flat_map(|&n| config.study.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let run = || -> Vec<Result<(RowReport, RowTimings)>> {
        jobs.par_iter()
            .map(|&(n, seed)| run_row(config, table.as_ref(), n, seed))
            .collect()
    };
    let results = if config.study.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.study.workers)
            .build()
            .map_err(|e| Error::arg(e.to_string()))?
            .install(run)
    } else {
        run()
    };
    let mut rows = Vec::with_capacity(results.len());
    let mut timings = Vec::with_capacity(results.len());
    for r in results {
        let (row, t) = r?;
        rows.push(row);
        timings.push(t);
    }
    let fits = compute_fits(&rows);
    let spectrum = table
        .map(|t| {
            t.entries
                .iter()
                .map(|e| SpectrumLevel {
                    eigenvalue: e.eigenvalue,
                    multiplicity: e.multiplicity,
                })
                .collect()
        })
        .unwrap_or_default();
    Ok((
        ConvergenceReport {
            config: config.clone(),
            spectrum,
            rows,
            fits,
        },
        timings,
    ))
}

fn run_row(
    config: &StudyConfig,
    table: Option<&SpectrumTable>,
    n: usize,
    seed: u64,
) -> Result<(RowReport, RowTimings)> {
    let start = Instant::now();
    let budget = config.study.row_budget_secs;
    let over = |t: &Instant| t.elapsed().as_secs_f64() > budget;
    let man = config.manifold_spec()?;
    let dens = config.density_spec(&man)?;
    let kernel = config.kernel_spec()?;
    let kind = config.graph.kind;
    let big = n * config.study.quadrature_multiplier;
    let mut row = RowReport {
        n,
        seed,
        quadrature_size: big,
        flags: Vec::new(),
        eps_hat: None,
        h: None,
        margin: None,
        in_regime: false,
        converged: None,
        iterations: None,
        eigenvalues: Vec::new(),
        clusters: Vec::new(),
        kde: None,
    };
    let mut tm = RowTimings {
        n,
        seed,
        ..Default::default()
    };
    let mut lap = Instant::now();
    let mut stage = |slot: &mut f64| {
        *slot = lap.elapsed().as_secs_f64();
        lap = Instant::now();
    };
    macro_rules! finish {
        () => {{
            tm.total = start.elapsed().as_secs_f64();
            return Ok((row, tm));
        }};
    }
    macro_rules! check_budget {
        () => {
            if over(&start) {
                row.flags.push(FLAG_BUDGET.into());
                finish!();
            }
        };
    }

    let cloud = sample(&man, &dens, n, seed)?;
    let quad = quadrature_cloud(&man, &dens, big, seed)?;
    stage(&mut tm.sample);
    let plan = estimate_eps(&cloud, &quad, Metric::Geodesic)?;
    stage(&mut tm.transport);
    let eps = plan.eps_hat;
    let h = config.bandwidth(n, eps);
    let margin = h - (man.m as f64 + 5.0) * eps;
    row.eps_hat = Some(eps);
    row.h = Some(h);
    row.margin = Some(margin);
    row.in_regime = margin > 0.0;
    if !row.in_regime {
        row.flags.push(FLAG_OUT_OF_REGIME.into());
    }
    check_budget!();

    let graph = build_graph_with(&cloud, h, &kernel, config.graph.self_loops)?;
    stage(&mut tm.graph);
    let kde = kde_report(&graph, &cloud, Some(eps));
    row.kde = Some(KdeSummary {
        max_error: kde.max_error,
        lipschitz_term: kde.lipschitz_term,
        transport_term: kde.transport_term,
        curvature_term: kde.curvature_term,
    });
    stage(&mut tm.kde);
    let op = match assemble(&graph, kind) {
        Ok(op) => op,
        Err(e) => {
            row.flags.push(format!("error: {e}"));
            finish!();
        }
    };
    let want = (config.study.k + 2).min(n);
    let eig = smallest_k(&op, want, config.tolerances.eig_tol, config.tolerances.max_iter)?;
    stage(&mut tm.eigen);
    row.converged = Some(eig.converged);
    row.iterations = Some(eig.iterations);
    if !eig.converged {
        row.flags.push(FLAG_NOT_CONVERGED.into());
    }
    row.eigenvalues = eig.eigenvalues.clone();
    let Some(table) = table else { finish!() };

    let mut slots: Vec<(usize, std::ops::Range<usize>)> = Vec::new();
    for (e, entry) in table.entries.iter().enumerate() {
        let first = table.first_index(e);
        if first >= config.study.k {
            break;
        }
        let range = first..(first + entry.multiplicity);
        let complete = range.end <= eig.len();
        let discrete_mean = complete
            .then(|| eig.eigenvalues[range.clone()].iter().sum::<f64>() / entry.multiplicity as f64);
        let relative_error = match discrete_mean {
            Some(mean) if entry.eigenvalue > 0.0 => {
                Some((mean - entry.eigenvalue).abs() / entry.eigenvalue)
            }
            _ => None,
        };
        if complete && entry.eigenvalue > 0.0 {
            slots.push((row.clusters.len(), range));
        }
        row.clusters.push(ClusterRow {
            entry: e,
            first_index: first,
            multiplicity: entry.multiplicity,
            lambda_continuum: entry.eigenvalue,
            discrete_mean,
            relative_error,
            gap: table.gap(e),
            align_interp: None,
            align_voronoi: None,
        });
    }
    check_budget!();

    if config.study.eigenfunctions && h - 2.0 * eps > 0.0 && !slots.is_empty() {
        let rho = Rho::for_kind(kind).values(&quad);
        let scale: Option<Vec<f64>> = (kind == LaplacianKind::Symmetric)
            .then(|| degrees(&graph).iter().map(|m| 1.0 / m.sqrt()).collect());
        let vectors: Vec<Vec<f64>> = slots
            .iter()
            .flat_map(|(_, r)| r.clone())
            .map(|i| match &scale {
                Some(s) => eig.vectors[i].iter().zip(s).map(|(a, b)| a * b).collect(),
                None => eig.vectors[i].clone(),
            })
            .collect();
        let refs: Vec<&[f64]> = vectors.iter().map(Vec::as_slice).collect();
        let interp = interpolate_i_many(&refs, &plan, &quad, rho.clone(), &kernel, h)?;
        let part = voronoi_partition(&cloud, &quad)?;
        let mut next = 0;
        for (c, range) in &slots {
            let entry = row.clusters[*c].entry;
            let (mut ai, mut av) = (0.0f64, 0.0f64);
            for _ in range.clone() {
                let bar = voronoi_extend(&vectors[next], &part, rho.clone())?;
                ai = ai.max(align_eigenspace(&interp[next], table, entry, &quad)?.subspace_error);
                av = av.max(align_eigenspace(&bar, table, entry, &quad)?.subspace_error);
                next += 1;
            }
            row.clusters[*c].align_interp = Some(ai);
            row.clusters[*c].align_voronoi = Some(av);
        }
        stage(&mut tm.align);
    }
    finish!()
}

/// Median-over-seeds fits for every nonzero cluster, on in-regime rows and on all rows.
pub fn compute_fits(rows: &[RowReport]) -> Vec<FitReport> {
    let mut entries: Vec<usize> = rows
        .iter()
        .flat_map(|r| r.clusters.iter().filter(|c| c.lambda_continuum > 0.0).map(|c| c.entry))
        .collect();
    entries.sort_unstable();
    entries.dedup();
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut fits = Vec::new();
    for &entry in &entries {
        for quantity in [FitQuantity::Eigenvalue, FitQuantity::AlignInterp, FitQuantity::AlignVoronoi] {
            for subset in [FitSubset::InRegime, FitSubset::All] {
                let medians: Vec<(usize, f64)> = ns
                    .iter()
                    .filter_map(|&n| {
                        let mut vals: Vec<f64> = rows
                            .iter()
                            .filter(|r| r.n == n && (subset == FitSubset::All || r.in_regime))
                            .filter_map(|r| r.clusters.iter().find(|c| c.entry == entry))
                            .filter_map(|c| match quantity {
                                FitQuantity::Eigenvalue => c.relative_error,
                                FitQuantity::AlignInterp => c.align_interp,
                                FitQuantity::AlignVoronoi => c.align_voronoi,
                            })
                            .collect();
                        median(&mut vals).map(|m| (n, m))
                    })
                    .collect();
                if medians.is_empty() {
                    continue;
                }
                let strictly_decreasing = medians.len() >= 2 && medians.windows(2).all(|w| w[1].1 < w[0].1);
                let pts: Vec<(f64, f64)> = medians.iter().map(|&(n, e)| (n as f64, e)).collect();
                let fit = if pts.len() >= 2 { fit_rate(&pts).ok() } else { None };
                fits.push(FitReport {
                    quantity,
                    entry,
                    subset,
                    medians,
                    strictly_decreasing,
                    fit,
                });
            }
        }
    }
    fits
}

impl ConvergenceReport {
    pub fn fit(&self, quantity: FitQuantity, entry: usize, subset: FitSubset) -> Option<&FitReport> {
        self.fits
            .iter()
            .find(|f| f.quantity == quantity && f.entry == entry && f.subset == subset)
    }
}
