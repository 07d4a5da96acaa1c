use serde::{Deserialize, Serialize};

use crate::geometry::{unit_ball_volume, PointCloud};
use crate::graph::{degrees, WeightedGraph};

/// Degree vs density comparison with the pieces of its error bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeReport {
    pub max_error: f64,
    pub errors: Vec<f64>,
    /// `L_p h`.
    pub lipschitz_term: f64,
    /// `α η(0) m ω_m ε̂ / h`; zero when no ε̂ is supplied.
    pub transport_term: f64,
    /// `α m (K + 1/R²) h²`.
    pub curvature_term: f64,
}

/// Compares degrees `m_i` against the sampling density at each vertex.
pub fn kde_report(graph: &WeightedGraph, cloud: &PointCloud, eps_hat: Option<f64>) -> KdeReport {
    let deg = degrees(graph);
    let p = cloud.density_values();
    let errors: Vec<f64> = deg.iter().zip(&p).map(|(a, b)| (a - b).abs()).collect();
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    let man = &cloud.manifold;
    let dens = &cloud.density;
    let h = graph.h;
    let m = man.m as f64;
    KdeReport {
        max_error,
        errors,
        lipschitz_term: dens.lipschitz * h,
        transport_term: eps_hat
            .map(|e| dens.alpha * graph.kernel.eta(0.0) * m * unit_ball_volume(man.m) * e / h)
            .unwrap_or(0.0),
        curvature_term: dens.alpha * m * (man.curvature_bound + 1.0 / (man.reach * man.reach)) * h * h,
    }
}
