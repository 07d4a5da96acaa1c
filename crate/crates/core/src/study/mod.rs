//! End-to-end convergence studies: configuration, the per-row pipeline,
//! rate fits, and report emission.

mod config;
mod emit;
mod fit;
mod run;

pub use config::{
    schedule_exponent, scheduled_h, BandwidthSection, DensitySection, GraphSection, HRule, ManifoldSection,
    StudyConfig, StudySection, Tolerances,
};
pub use emit::{emit, emit_timings, report_from_json, to_canonical_json, to_csv, to_svg, EmitFormat, CSV_HEADER};
pub use fit::{fit_rate, RateFit};
pub use run::{
    compute_fits, reference_spectrum, run_study, ClusterRow, ConvergenceReport, FitQuantity, FitReport,
    FitSubset, KdeSummary, RowReport, RowTimings, SpectrumLevel, FLAG_BUDGET, FLAG_NOT_CONVERGED,
    FLAG_OUT_OF_REGIME,
};

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
[manifold]
kind = "torus"
m = 2

[graph]
kernel = "gauss"
kind = "unnormalized"

[bandwidth]
rule = "fixed"
value = 0.35

[study]
n = [60, 120]
seeds = [1, 2]
k = 5
quadrature_multiplier = 10
"#;

    #[test]
    fn config_validation() {
        let cfg = StudyConfig::from_toml(SMALL).unwrap();
        assert_eq!(cfg.study.quadrature_multiplier, 10);
        assert!(cfg.study.eigenfunctions);
        let bad = SMALL.replace("n = [60, 120]", "n = [120, 60]");
        assert!(StudyConfig::from_toml(&bad).is_err());
        let bad = SMALL.replace("seeds = [1, 2]", "seeds = []");
        assert!(StudyConfig::from_toml(&bad).is_err());
        assert!(StudyConfig::from_toml("[manifold]\nkind = \"torus\"").is_err());
    }

    #[test]
    fn schedule_exponents() {
        assert_eq!(schedule_exponent(2), 0.75);
        assert_eq!(schedule_exponent(3), 1.0 / 3.0);
        let h = scheduled_h(2000, 2);
        let want = (2000f64.ln().powf(0.75) / 2000f64.sqrt()).sqrt();
        assert_eq!(h, want);
    }

    #[test]
    fn small_study_is_reproducible() {
        let cfg = StudyConfig::from_toml(SMALL).unwrap();
        let (a, _) = run_study(&cfg).unwrap();
        let (b, _) = run_study(&cfg).unwrap();
        let ja = to_canonical_json(&a).unwrap();
        assert_eq!(ja, to_canonical_json(&b).unwrap());
        let back = report_from_json(&ja).unwrap();
        assert_eq!(to_canonical_json(&back).unwrap(), ja);

        assert_eq!(a.rows.len(), 4);
        for row in &a.rows {
            assert!(row.eigenvalues[0].abs() < 1e-10);
            let margin = row.h.unwrap() - 7.0 * row.eps_hat.unwrap();
            assert_eq!(row.margin, Some(margin));
            assert_eq!(row.in_regime, margin > 0.0);
            assert_eq!(row.flags.contains(&FLAG_OUT_OF_REGIME.to_string()), !row.in_regime);
        }
        let csv = to_csv(&a).unwrap();
        assert_eq!(csv.lines().count(), 1 + a.rows.len() * cfg.study.k);
        assert!(to_svg(&a).starts_with("<svg"));
    }

    #[test]
    fn empty_report_emits_headers() {
        let cfg = StudyConfig::from_toml(SMALL).unwrap();
        let empty = ConvergenceReport {
            config: cfg,
            spectrum: Vec::new(),
            rows: Vec::new(),
            fits: Vec::new(),
        };
        assert_eq!(to_csv(&empty).unwrap().lines().count(), 1);
        assert!(to_svg(&empty).ends_with("</svg>\n"));
        let dir = tempfile::tempdir().unwrap();
        for (f, name) in [(EmitFormat::Json, "r.json"), (EmitFormat::Csv, "r.csv"), (EmitFormat::SvgPlotData, "r.svg")] {
            emit(&empty, f, &dir.path().join(name)).unwrap();
        }
        assert!(emit(&empty, EmitFormat::Json, &dir.path().join("missing/r.json")).is_err());
    }

    #[test]
    fn single_size_has_no_fit() {
        let cfg = StudyConfig::from_toml(&SMALL.replace("n = [60, 120]", "n = [80]")).unwrap();
        let (r, _) = run_study(&cfg).unwrap();
        assert!(!r.fits.is_empty());
        assert!(r.fits.iter().all(|f| f.fit.is_none() && !f.strictly_decreasing));
    }
}
