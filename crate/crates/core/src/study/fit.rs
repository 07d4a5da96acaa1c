use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line through `(log n, log error)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; absent with only two points.
    pub stderr: Option<f64>,
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::arg("a rate fit needs at least two points"));
    }
    if let Some(&(n, e)) = points.iter().find(|(n, e)| !(*n > 0.0 && *e > 0.0)) {
        return Err(Error::arg(format!("rate fit needs positive data, got ({n}, {e})")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("rate fit needs at least two distinct n"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = (points.len() > 2).then(|| {
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (k - 2.0) / sxx).sqrt()
    });
    Ok(RateFit {
        slope,
        intercept,
        stderr,
    })
}

pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [500.0, 1000.0, 2000.0, 4000.0]
            .iter()
            .map(|&n: &f64| (n, 3.0 * n.powf(-0.25)))
            .collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope + 0.25).abs() < 1e-12);
        assert!(f.stderr.unwrap() < 1e-12);
    }

    #[test]
    fn constant_errors_have_zero_slope() {
        let f = fit_rate(&[(10.0, 0.3), (20.0, 0.3), (40.0, 0.3)]).unwrap();
        assert!(f.slope.abs() < 1e-15);
    }

    #[test]
    fn log_corrected_rate_is_flatter() {
        let pts: Vec<(f64, f64)> = [500.0, 1000.0, 2000.0, 4000.0]
            .iter()
            .map(|&n: &f64| (n, (n.ln() / n).powf(0.25)))
            .collect();
        let s = fit_rate(&pts).unwrap().slope;
        assert!((-0.22..=-0.18).contains(&s), "{s}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_rate(&[(10.0, 1.0)]).is_err());
        assert!(fit_rate(&[(10.0, 1.0), (20.0, 0.0)]).is_err());
        assert!(fit_rate(&[(10.0, 1.0), (10.0, 2.0)]).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }
}
