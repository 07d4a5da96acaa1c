use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::{ConvergenceReport, FitQuantity, FitSubset, RowReport, RowTimings};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmitFormat {
    Json,
    Csv,
    SvgPlotData,
}

pub const CSV_HEADER: [&str; 17] = [
    "n",
    "seed",
    "index",
    "h",
    "eps_hat",
    "margin",
    "in_regime",
    "converged",
    "lambda_graph",
    "lambda_continuum",
    "cluster_entry",
    "cluster_mean",
    "relative_error",
    "align_interp",
    "align_voronoi",
    "kde_max_error",
    "flags",
];

/// Sorted-key JSON with shortest round-trip floats, newline terminated.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn report_from_json(text: &str) -> Result<ConvergenceReport> {
    Ok(serde_json::from_str(text)?)
}

pub fn emit(report: &ConvergenceReport, format: EmitFormat, path: &Path) -> Result<()> {
    let text = match format {
        EmitFormat::Json => to_canonical_json(report)?,
        EmitFormat::Csv => to_csv(report)?,
        EmitFormat::SvgPlotData => to_svg(report),
    };
    std::fs::write(path, text)?;
    Ok(())
}

pub fn emit_timings(timings: &[RowTimings], path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(timings)? + "\n")?;
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One line per `(n, seed, eigen-index)` for the first `k` indices.
pub fn to_csv(report: &ConvergenceReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let continuum: Vec<f64> = report
        .spectrum
        .iter()
        .flat_map(|l| std::iter::repeat_n(l.eigenvalue, l.multiplicity))
        .collect();
    for row in &report.rows {
        for index in 0..report.config.study.k {
            w.write_record(csv_record(row, index, continuum.get(index).copied()))
                .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

fn csv_record(row: &RowReport, index: usize, continuum: Option<f64>) -> Vec<String> {
    let cluster = row
        .clusters
        .iter()
        .find(|c| (c.first_index..c.first_index + c.multiplicity).contains(&index));
    vec![
        row.n.to_string(),
        row.seed.to_string(),
        index.to_string(),
        opt(row.h),
        opt(row.eps_hat),
        opt(row.margin),
        row.in_regime.to_string(),
        opt(row.converged),
        opt(row.eigenvalues.get(index)),
        opt(continuum),
        opt(cluster.map(|c| c.entry)),
        opt(cluster.and_then(|c| c.discrete_mean)),
        opt(cluster.and_then(|c| c.relative_error)),
        opt(cluster.and_then(|c| c.align_interp)),
        opt(cluster.and_then(|c| c.align_voronoi)),
        opt(row.kde.as_ref().map(|k| k.max_error)),
        row.flags.join(";"),
    ]
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;

/// Log-log scatter of the first nonzero cluster's relative eigenvalue error
/// against `n`, with per-row points, medians and the fitted line.
pub fn to_svg(report: &ConvergenceReport) -> String {
    let entry = report
        .rows
        .iter()
        .flat_map(|r| &r.clusters)
        .filter(|c| c.lambda_continuum > 0.0)
        .map(|c| c.entry)
        .min();
    let points: Vec<(f64, f64)> = report
        .rows
        .iter()
        .flat_map(|r| {
            r.clusters
                .iter()
                .filter(|c| Some(c.entry) == entry)
                .filter_map(|c| c.relative_error)
                .filter(|e| *e > 0.0)
                .map(move |e| (r.n as f64, e))
        })
        .collect();
    let fit = entry.and_then(|e| report.fit(FitQuantity::Eigenvalue, e, FitSubset::All));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">relative eigenvalue error vs n (log-log)</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} L{PAD} {y} L{x} {y}" stroke="black" fill="none"/>"#,
        y = H - PAD,
        x = W - PAD
    );
    if !points.is_empty() {
        let lx: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
        let ly: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
        let (x0, x1) = padded_range(&lx);
        let (y0, y1) = padded_range(&ly);
        let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
        for (x, y) in lx.iter().zip(&ly) {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
                px(*x),
                py(*y)
            );
        }
        if let Some(f) = fit {
            for (n, m) in &f.medians {
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="darkorange"/>"#,
                    px((*n as f64).log10()) - 3.5,
                    py(m.log10()) - 3.5
                );
            }
            if let Some(line) = f.fit {
                let at = |x: f64| (line.intercept + line.slope * x * std::f64::consts::LN_10) / std::f64::consts::LN_10;
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson"/>"#,
                    px(x0),
                    py(at(x0)),
                    px(x1),
                    py(at(x1))
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">slope {:.3}</text>"#,
                    W - PAD - 90.0,
                    PAD - 10.0,
                    line.slope
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="11">n {:.0} .. {:.0}</text>"#,
            H - PAD + 20.0,
            10f64.powf(x0),
            10f64.powf(x1)
        );
        let _ = writeln!(
            s,
            r#"<text x="4" y="{}" font-family="sans-serif" font-size="11">err {:.3e} .. {:.3e}</text>"#,
            PAD - 10.0,
            10f64.powf(y0),
            10f64.powf(y1)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn padded_range(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((hi - lo) * 0.1).max(0.05);
    (lo - pad, hi + pad)
}
