//! Radial kernel profiles `η` normalized on R^m, their surface tension
//! `σ_η = ∫ |y_1|² η(|y|) dy`, and the smoothing profile
//! `ψ(t) = (1/σ_η) ∫_t^∞ η(s) s ds`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::unit_ball_volume;
use crate::quadrature::{adaptive_simpson, radial_integral};

/// Standard deviation of the truncated Gaussian profile, in units of the support radius.
pub const GAUSS_WIDTH: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelProfile {
    /// `(1/ω_m) 1_[0,1]`
    Indicator,
    /// `c (1 - t)_+`
    Bump,
    /// `c exp(-t² / (2 s²)) 1_[0,1]` with `s = 1/3`.
    Gauss,
}

impl KernelProfile {
    fn raw(self, t: f64) -> f64 {
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        match self {
            KernelProfile::Indicator => 1.0,
            KernelProfile::Bump => 1.0 - t,
            KernelProfile::Gauss => (-t * t / (2.0 * GAUSS_WIDTH * GAUSS_WIDTH)).exp(),
        }
    }

    // ∫_t^1 raw(s) s ds
    fn raw_tail_moment(self, t: f64) -> f64 {
        if t >= 1.0 {
            return 0.0;
        }
        let t = t.max(0.0);
        match self {
            KernelProfile::Indicator => 0.5 * (1.0 - t * t),
            KernelProfile::Bump => 1.0 / 6.0 - t * t / 2.0 + t * t * t / 3.0,
            KernelProfile::Gauss => {
                let s2 = GAUSS_WIDTH * GAUSS_WIDTH;
                s2 * ((-t * t / (2.0 * s2)).exp() - (-1.0 / (2.0 * s2)).exp())
            }
        }
    }
}

impl fmt::Display for KernelProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelProfile::Indicator => "indicator",
            KernelProfile::Bump => "bump",
            KernelProfile::Gauss => "gauss",
        })
    }
}

impl FromStr for KernelProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "indicator" => Ok(KernelProfile::Indicator),
            "bump" => Ok(KernelProfile::Bump),
            "gauss" | "gaussian" => Ok(KernelProfile::Gauss),
            _ => Err(Error::arg(format!("unknown kernel profile {s:?}"))),
        }
    }
}

/// A normalized kernel profile with its derived constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub profile: KernelProfile,
    pub m: usize,
    /// Normalizing constant multiplying the raw profile.
    pub scale: f64,
    /// Surface tension `σ_η`.
    pub sigma: f64,
    /// Lipschitz constant of `η` on `[0, 1]`.
    pub lipschitz: f64,
}

pub fn make_kernel(profile: KernelProfile, m: usize) -> Result<KernelSpec> {
    if m < 2 {
        return Err(Error::arg(format!("kernel dimension must be >= 2, got {m}")));
    }
    let omega = unit_ball_volume(m);
    let (scale, sigma) = match profile {
        KernelProfile::Indicator => (1.0 / omega, 1.0 / (m as f64 + 2.0)),
        _ => {
            let mass = radial_integral(|r| profile.raw(r), m);
            let scale = 1.0 / mass;
            // σ = (1/m) ∫ |y|² η(|y|) dy
            let second = radial_integral(|r| r * r * profile.raw(r), m);
            (scale, scale * second / m as f64)
        }
    };
    let lipschitz = match profile {
        KernelProfile::Indicator => 0.0,
        KernelProfile::Bump => scale,
        KernelProfile::Gauss => scale / GAUSS_WIDTH * (-0.5f64).exp(),
    };
    Ok(KernelSpec {
        profile,
        m,
        scale,
        sigma,
        lipschitz,
    })
}

impl KernelSpec {
    /// `η(t)`, zero for `t > 1`.
    #[inline]
    pub fn eta(&self, t: f64) -> f64 {
        self.scale * self.profile.raw(t)
    }

    /// `ψ(t) = (1/σ_η) ∫_t^∞ η(s) s ds`.
    #[inline]
    pub fn psi(&self, t: f64) -> f64 {
        self.scale * self.profile.raw_tail_moment(t) / self.sigma
    }

    /// `∫_{R^m} η(|x|) dx` by radial quadrature.
    pub fn mass(&self) -> f64 {
        radial_integral(|r| self.eta(r), self.m)
    }

    /// `∫_{R^m} ψ(|x|) dx` by radial quadrature.
    pub fn psi_mass(&self) -> f64 {
        radial_integral(|r| self.psi(r), self.m)
    }

    /// `∫_t^1 η(s) s ds` by quadrature, for cross-checking the closed form in `psi`.
    pub fn tail_moment_numeric(&self, t: f64) -> f64 {
        adaptive_simpson(&|s: f64| self.eta(s) * s, t.clamp(0.0, 1.0), 1.0, 1e-14)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn indicator_constants() {
        for m in 2..=4 {
            let k = make_kernel(KernelProfile::Indicator, m).unwrap();
            assert!((k.sigma - 1.0 / (m as f64 + 2.0)).abs() <= 1e-15);
            assert!((k.mass() - 1.0).abs() < 1e-10);
        }
        let k2 = make_kernel(KernelProfile::Indicator, 2).unwrap();
        assert!((k2.eta(0.0) - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn bump_sigma_matches_symbolic() {
        // c = (m+1)/ω_m and σ = (m+1)/((m+2)(m+3)) from the elementary radial integrals.
        for m in 2..=4 {
            let k = make_kernel(KernelProfile::Bump, m).unwrap();
            let mf = m as f64;
            assert!((k.scale - (mf + 1.0) / unit_ball_volume(m)).abs() < 1e-8 * k.scale);
            assert!((k.sigma - (mf + 1.0) / ((mf + 2.0) * (mf + 3.0))).abs() < 1e-8);
        }
    }

    #[test]
    fn normalizations() {
        for profile in [KernelProfile::Indicator, KernelProfile::Bump, KernelProfile::Gauss] {
            for m in 2..=4 {
                let k = make_kernel(profile, m).unwrap();
                assert!((k.mass() - 1.0).abs() <= 1e-6, "{profile} m={m}");
                assert!((k.psi_mass() - 1.0).abs() <= 1e-6, "{profile} m={m}");
            }
        }
    }

    #[test]
    fn shape_invariants() {
        for profile in [KernelProfile::Indicator, KernelProfile::Bump, KernelProfile::Gauss] {
            let k = make_kernel(profile, 2).unwrap();
            assert!(k.eta(0.5) > 0.0);
            assert_eq!(k.eta(1.0 + 1e-12), 0.0);
            assert_eq!(k.psi(1.0), 0.0);
            let mut prev = f64::INFINITY;
            for i in 0..=100 {
                let t = i as f64 / 100.0;
                assert!(k.eta(t) <= prev);
                prev = k.eta(t);
                let closed = k.psi(t) * k.sigma;
                assert!((closed - k.tail_moment_numeric(t)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("bump".parse::<KernelProfile>().unwrap(), KernelProfile::Bump);
        assert!("cauchy".parse::<KernelProfile>().is_err());
    }
}
