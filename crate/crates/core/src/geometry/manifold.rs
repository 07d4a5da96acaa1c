use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for on-manifold membership checks.
pub const ON_MANIFOLD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    /// Unit sphere S^m in R^{m+1}.
    Sphere,
    /// Unit-period flat torus T^m, each angle on a circle of radius 1/(2π) in R^{2m}.
    Torus,
}

impl ManifoldKind {
    pub fn tag(self) -> u32 {
        match self {
            ManifoldKind::Sphere => 1,
            ManifoldKind::Torus => 2,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            1 => Some(ManifoldKind::Sphere),
            2 => Some(ManifoldKind::Torus),
            _ => None,
        }
    }
}

/// A model manifold together with the geometric constants that enter the
/// convergence estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    /// Intrinsic dimension.
    pub m: usize,
    /// Ambient dimension.
    pub d: usize,
    pub volume: f64,
    pub curvature_bound: f64,
    pub injectivity_radius: f64,
    pub reach: f64,
}

/// Volume of the unit ball in R^m.
pub fn unit_ball_volume(m: usize) -> f64 {
    match m {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / m as f64 * unit_ball_volume(m - 2),
    }
}

/// Surface area of the unit sphere S^m ⊂ R^{m+1}.
pub fn sphere_area(m: usize) -> f64 {
    (m + 1) as f64 * unit_ball_volume(m + 1)
}

impl ManifoldSpec {
    pub fn sphere(m: usize) -> Result<Self> {
        check_dim(m)?;
        Ok(ManifoldSpec {
            kind: ManifoldKind::Sphere,
            m,
            d: m + 1,
            volume: sphere_area(m),
            curvature_bound: 1.0,
            injectivity_radius: PI,
            reach: 1.0,
        })
    }

    pub fn torus(m: usize) -> Result<Self> {
        check_dim(m)?;
        Ok(ManifoldSpec {
            kind: ManifoldKind::Torus,
            m,
            d: 2 * m,
            volume: 1.0,
            curvature_bound: 0.0,
            injectivity_radius: 0.5,
            reach: 1.0 / (2.0 * PI),
        })
    }

    pub fn from_kind(kind: ManifoldKind, m: usize) -> Result<Self> {
        match kind {
            ManifoldKind::Sphere => Self::sphere(m),
            ManifoldKind::Torus => Self::torus(m),
        }
    }

    /// Largest deviation of `x` from the defining equations: `| |x| - 1 |` on
    /// the sphere, the worst per-circle radius error on the torus.
    pub fn deviation(&self, x: &[f64]) -> f64 {
        if x.len() != self.d {
            return f64::INFINITY;
        }
        match self.kind {
            ManifoldKind::Sphere => (norm(x) - 1.0).abs(),
            ManifoldKind::Torus => {
                let r = 1.0 / (2.0 * PI);
                (0..self.m)
                    .map(|i| (x[i].hypot(x[self.m + i]) - r).abs())
                    .fold(0.0, f64::max)
            }
        }
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        let dev = self.deviation(x);
        if dev <= ON_MANIFOLD_TOL {
            Ok(())
        } else {
            Err(Error::OffManifold {
                index: 0,
                deviation: dev,
            })
        }
    }

    /// Geodesic distance, validating that both points lie on the manifold.
    pub fn geodesic(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y).map_err(|e| match e {
            Error::OffManifold { deviation, .. } => Error::OffManifold {
                index: 1,
                deviation,
            },
            other => other,
        })?;
        Ok(self.geodesic_unchecked(x, y))
    }

    /// Geodesic distance for points already known to be on the manifold.
    pub fn geodesic_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            // angle between x and y as 2·atan2(|x−y|, |x+y|): equal to
            // arccos(<x,y>) but exact at coincident points and accurate for
            // small separations, where arccos loses half the digits
            ManifoldKind::Sphere => {
                let (mut diff, mut sum) = (0.0, 0.0);
                for (a, b) in x.iter().zip(y) {
                    diff += (a - b) * (a - b);
                    sum += (a + b) * (a + b);
                }
                2.0 * diff.sqrt().atan2(sum.sqrt())
            }
            ManifoldKind::Torus => {
                let mut s = 0.0;
                for i in 0..self.m {
                    let a = circle_angle(x[i], x[self.m + i]);
                    let b = circle_angle(y[i], y[self.m + i]);
                    let t = periodic_gap(a - b);
                    s += t * t;
                }
                s.sqrt()
            }
        }
    }

    /// Intrinsic coordinates of a torus point, each in `[0, 1)`.
    pub fn torus_angles(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.kind, ManifoldKind::Torus);
        (0..self.m)
            .map(|i| circle_angle(x[i], x[self.m + i]))
            .collect()
    }

    /// Embeds intrinsic torus coordinates (period 1) into R^{2m}.
    pub fn embed_torus(&self, angles: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.kind, ManifoldKind::Torus);
        let r = 1.0 / (2.0 * PI);
        let mut x = vec![0.0; self.d];
        for (i, &t) in angles.iter().enumerate() {
            let (s, c) = (2.0 * PI * t).sin_cos();
            x[i] = r * c;
            x[self.m + i] = r * s;
        }
        x
    }

    /// Unit tangent direction of the i-th torus angle at `x`, in ambient coordinates.
    pub(crate) fn torus_tangent(&self, x: &[f64], axis: usize) -> Vec<f64> {
        let r = x[axis].hypot(x[self.m + axis]);
        let mut t = vec![0.0; self.d];
        t[axis] = -x[self.m + axis] / r;
        t[self.m + axis] = x[axis] / r;
        t
    }
}

fn check_dim(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::arg(format!("intrinsic dimension must be >= 2, got {m}")));
    }
    Ok(())
}

/// Angle of a point on a circle as a fraction of a full turn, in `[0, 1)`.
pub(crate) fn circle_angle(c: f64, s: f64) -> f64 {
    let t = s.atan2(c) / (2.0 * PI);
    if t < 0.0 {
        t + 1.0
    } else {
        t
    }
}

/// Length of the shorter arc for a unit-period angle difference.
pub(crate) fn periodic_gap(delta: f64) -> f64 {
    let t = delta.rem_euclid(1.0);
    t.min(1.0 - t)
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let s = ManifoldSpec::sphere(2).unwrap();
        assert_eq!(s.d, 3);
        assert!((s.volume - 4.0 * PI).abs() < 1e-12);
        let s3 = ManifoldSpec::sphere(3).unwrap();
        assert!((s3.volume - 2.0 * PI * PI).abs() < 1e-12);
        let t = ManifoldSpec::torus(3).unwrap();
        assert_eq!(t.d, 6);
        assert_eq!(t.volume, 1.0);
        assert!((t.reach - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(ManifoldSpec::sphere(1).is_err());
    }

    #[test]
    fn unit_balls() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_geodesics() {
        let s = ManifoldSpec::sphere(2).unwrap();
        let x = [0.0, 0.0, 1.0];
        let y = [0.0, 0.0, -1.0];
        assert_eq!(s.geodesic(&x, &x).unwrap(), 0.0);
        assert!((s.geodesic(&x, &y).unwrap() - PI).abs() < 1e-15);
        assert!(matches!(
            s.geodesic(&x, &[0.0, 0.0, 1.1]),
            Err(Error::OffManifold { index: 1, .. })
        ));
    }

    #[test]
    fn torus_geodesic_wraps() {
        let t = ManifoldSpec::torus(2).unwrap();
        let x = t.embed_torus(&[0.05, 0.5]);
        let y = t.embed_torus(&[0.95, 0.5]);
        assert!((t.geodesic(&x, &y).unwrap() - 0.1).abs() < 1e-12);
        let z = t.embed_torus(&[0.05, 0.8]);
        assert!((t.geodesic(&x, &z).unwrap() - 0.3).abs() < 1e-12);
        assert!(t.deviation(&x) < 1e-15);
        let back = t.torus_angles(&x);
        assert!((back[0] - 0.05).abs() < 1e-14 && (back[1] - 0.5).abs() < 1e-14);
    }
}
