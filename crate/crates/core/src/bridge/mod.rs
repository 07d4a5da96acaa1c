//! Operators between vertex functions and functions on the manifold:
//! discretization `P`, its adjoint-like extension `P*`, smoothing `Λ_r`,
//! interpolation `I`, the Voronoi extension, energies, the continuum
//! spectrum oracle, eigenspace alignment, and the degree/density comparison.

mod align;
mod field;
mod kde;
mod oracle;
mod smoothing;

pub use align::{align_eigenspace, AlignmentReport};
pub use field::{ContinuumField, Rho};
pub use kde::{kde_report, KdeReport};
pub use oracle::{continuum_oracle_spectrum, ORACLE_START_CUTOFF};
pub use smoothing::{nonlocal_energy, smooth_lambda, smooth_lambda_many, smoothing_theta};

use crate::error::{Error, Result};
use crate::geometry::{Eigenfunction, PointCloud};
use crate::kernel::KernelSpec;
use crate::transport::{TransportPlan, VoronoiPartition};

/// `(Pf)(x_i)`: the average of `f` over the transport cell `U_i`.
pub fn discretize_p(f: &ContinuumField, plan: &TransportPlan) -> Result<Vec<f64>> {
    check_plan(f.len(), plan)?;
    Ok(plan
        .cells
        .iter()
        .map(|cell| {
            // offset by one member so a constant cell averages exactly
            let base = f.values[cell[0]];
            base + cell.iter().map(|&q| f.values[q] - base).sum::<f64>() / cell.len() as f64
        })
        .collect())
}

/// `P*u`: the field equal to `u(x_i)` on every quadrature point of `U_i`.
pub fn extend_pstar(u: &[f64], plan: &TransportPlan, rho: Vec<f64>) -> Result<ContinuumField> {
    if u.len() != plan.cells.len() {
        return Err(Error::arg(format!(
            "vertex function has {} values but the plan has {} cells",
            u.len(),
            plan.cells.len()
        )));
    }
    check_plan(rho.len(), plan)?;
    let mut values = vec![0.0; rho.len()];
    for (i, cell) in plan.cells.iter().enumerate() {
        for &q in cell {
            values[q] = u[i];
        }
    }
    ContinuumField::new(values, rho)
}

/// `Iu = Λ_{h−2ε̂} P*u`.
pub fn interpolate_i(
    u: &[f64],
    plan: &TransportPlan,
    quadrature: &PointCloud,
    rho: Vec<f64>,
    kernel: &KernelSpec,
    h: f64,
) -> Result<ContinuumField> {
    Ok(interpolate_i_many(&[u], plan, quadrature, rho, kernel, h)?.remove(0))
}

/// [`interpolate_i`] for several vertex functions sharing one neighbor sweep.
pub fn interpolate_i_many(
    us: &[&[f64]],
    plan: &TransportPlan,
    quadrature: &PointCloud,
    rho: Vec<f64>,
    kernel: &KernelSpec,
    h: f64,
) -> Result<Vec<ContinuumField>> {
    let r = h - 2.0 * plan.eps_hat;
    if !(r > 0.0) {
        return Err(Error::RegimeViolation { margin: r });
    }
    let fields = us
        .iter()
        .map(|u| extend_pstar(u, plan, rho.clone()))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&ContinuumField> = fields.iter().collect();
    smooth_lambda_many(&refs, quadrature, kernel, r)
}

/// `ū`: each quadrature point takes the value of its nearest data point.
pub fn voronoi_extend(u: &[f64], partition: &VoronoiPartition, rho: Vec<f64>) -> Result<ContinuumField> {
    if u.len() != partition.n {
        return Err(Error::arg("vertex function and partition sizes differ"));
    }
    let values = partition.owner.iter().map(|&o| u[o]).collect();
    ContinuumField::new(values, rho)
}

/// `D(f) = ∫ |∇f|² p² dVol`, as the quadrature mean of `|∇f|² p`.
pub fn continuum_dirichlet_d(f: &Eigenfunction, quadrature: &PointCloud) -> f64 {
    let man = &quadrature.manifold;
    let p = quadrature.density_values();
    let s: f64 = quadrature
        .iter()
        .zip(&p)
        .map(|(x, p)| f.grad_norm_sq(man, x) * p)
        .sum();
    s / quadrature.len() as f64
}

fn check_plan(total: usize, plan: &TransportPlan) -> Result<()> {
    let covered: usize = plan.cells.iter().map(Vec::len).sum();
    if covered != total {
        return Err(Error::arg(format!(
            "plan covers {covered} quadrature points but the field has {total}"
        )));
    }
    if plan.cells.iter().any(Vec::is_empty) {
        return Err(Error::arg("plan has an empty cell"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::{quadrature_cloud, sample, DensitySpec, ManifoldSpec, Phase};
    use crate::kernel::{make_kernel, KernelProfile};
    use crate::laplacian::LaplacianKind;
    use crate::transport::{estimate_eps, voronoi_partition, Metric};

    fn torus_setup(n: usize, big: usize) -> (PointCloud, PointCloud, TransportPlan) {
        let t = ManifoldSpec::torus(2).unwrap();
        let p = DensitySpec::uniform(&t);
        let x = sample(&t, &p, n, 3).unwrap();
        let q = quadrature_cloud(&t, &p, big, 3).unwrap();
        let plan = estimate_eps(&x, &q, Metric::Geodesic).unwrap();
        (x, q, plan)
    }

    fn wave(k: &[i64], phase: Phase) -> Eigenfunction {
        Eigenfunction::TorusWave { wavevector: k.to_vec(), phase }
    }

    #[test]
    fn constants_are_fixed_points() {
        let (x, q, plan) = torus_setup(50, 1000);
        let kernel = make_kernel(KernelProfile::Gauss, 2).unwrap();
        let rho = Rho::One.values(&q);
        let c = ContinuumField::new(vec![2.5; q.len()], rho.clone()).unwrap();
        assert!(discretize_p(&c, &plan).unwrap().iter().all(|v| (v - 2.5).abs() < 1e-12));
        let u = vec![2.5; x.len()];
        let star = extend_pstar(&u, &plan, rho.clone()).unwrap();
        assert!(star.values.iter().all(|&v| v == 2.5));
        let s = smooth_lambda(&c, &q, &kernel, 0.2).unwrap();
        assert!(s.values.iter().all(|v| (v - 2.5).abs() < 1e-12));
        let iu = interpolate_i(&u, &plan, &q, rho.clone(), &kernel, 2.0 * plan.eps_hat + 0.2).unwrap();
        assert!(iu.values.iter().all(|v| (v - 2.5).abs() < 1e-12));
        let part = voronoi_partition(&x, &q).unwrap();
        let bar = voronoi_extend(&u, &part, rho).unwrap();
        assert!(bar.values.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn p_inverts_pstar() {
        let (x, q, plan) = torus_setup(40, 800);
        let u: Vec<f64> = (0..x.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let star = extend_pstar(&u, &plan, Rho::One.values(&q)).unwrap();
        assert_eq!(discretize_p(&star, &plan).unwrap(), u);
    }

    #[test]
    fn interpolation_rejects_small_bandwidth() {
        let (x, q, plan) = torus_setup(20, 200);
        let kernel = make_kernel(KernelProfile::Gauss, 2).unwrap();
        let u = vec![1.0; x.len()];
        let err = interpolate_i(&u, &plan, &q, Rho::One.values(&q), &kernel, plan.eps_hat).unwrap_err();
        assert!(matches!(err, Error::RegimeViolation { .. }));
    }

    #[test]
    fn tiny_radius_is_reported() {
        let (_, q, _) = torus_setup(10, 100);
        let kernel = make_kernel(KernelProfile::Indicator, 2).unwrap();
        // every point sees itself, so only a nonpositive radius can fail
        assert!(smoothing_theta(&q, &kernel, 1e-9).is_ok());
        assert!(smoothing_theta(&q, &kernel, 0.0).is_err());
    }

    #[test]
    fn dirichlet_form_closed_forms() {
        let t = ManifoldSpec::torus(2).unwrap();
        let q = quadrature_cloud(&t, &DensitySpec::uniform(&t), 20000, 1).unwrap();
        // D(√2 cos 2πx) = 2 · 4π² · ½
        let d = continuum_dirichlet_d(&wave(&[1, 0], Phase::Cos), &q) * 2.0;
        assert!((d / (4.0 * PI * PI) - 1.0).abs() < 0.02, "{d}");

        let s = ManifoldSpec::sphere(2).unwrap();
        let q = quadrature_cloud(&s, &DensitySpec::uniform(&s), 20000, 1).unwrap();
        let d = continuum_dirichlet_d(&Eigenfunction::Coordinate { axis: 2 }, &q);
        let exact = (8.0 * PI / 3.0) / (16.0 * PI * PI);
        assert!((d / exact - 1.0).abs() < 0.02, "{d} vs {exact}");
    }

    #[test]
    fn theta_near_one_on_sphere() {
        let s = ManifoldSpec::sphere(2).unwrap();
        let q = quadrature_cloud(&s, &DensitySpec::uniform(&s), 20000, 2).unwrap();
        let kernel = make_kernel(KernelProfile::Gauss, 2).unwrap();
        let theta = smoothing_theta(&q, &kernel, 0.2).unwrap();
        let worst = theta.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst <= 0.5, "{worst}");
    }

    #[test]
    fn oracle_reproduces_flat_spectrum() {
        let t = ManifoldSpec::torus(2).unwrap();
        let u = DensitySpec::uniform(&t);
        let tab = continuum_oracle_spectrum(&t, &u, Rho::One, 9).unwrap();
        let q = 4.0 * PI * PI;
        let want = [0.0, q, q, q, q, 2.0 * q, 2.0 * q, 2.0 * q, 2.0 * q, 4.0 * q];
        let got = tab.eigenvalues(10);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-9 * b.max(1.0), "{got:?}");
        }
        assert_eq!(tab.entries[0].functions, vec![Eigenfunction::Constant]);
        assert_eq!(tab.entries[1].multiplicity, 4);
    }

    #[test]
    fn oracle_eigenfunctions_satisfy_rayleigh_quotient() {
        let t = ManifoldSpec::torus(2).unwrap();
        let p = DensitySpec::torus_cosine(&t, 0.5, 0).unwrap();
        let q = quadrature_cloud(&t, &p, 40000, 5).unwrap();
        let un = continuum_oracle_spectrum(&t, &p, Rho::One, 6).unwrap();
        let rw = continuum_oracle_spectrum(&t, &p, Rho::Density, 6).unwrap();
        assert_eq!(un.kind, LaplacianKind::Unnormalized);
        let gap = un
            .eigenvalues(6)
            .iter()
            .zip(rw.eigenvalues(6))
            .map(|(a, b)| (a - b).abs() / b.max(1.0))
            .fold(0.0, f64::max);
        // frozen from an independent dense solve of the same 1-D pencils
        let frozen_rw = [41.251_978_26, 53.213_573_85, 80.730_395_86];
        for (e, want) in rw.entries[2..5].iter().zip(frozen_rw) {
            assert!((e.eigenvalue - want).abs() < 1e-6, "{} vs {want}", e.eigenvalue);
        }
        assert!((un.entries[2].eigenvalue - 75.416_159_63).abs() < 1e-6);
        assert!(gap > 0.05, "{:?} vs {:?}", un.eigenvalues(6), rw.eigenvalues(6));
        for (tab, rho) in [(&un, Rho::One), (&rw, Rho::Density)] {
            for e in &tab.entries[1..3] {
                for f in &e.functions {
                    let field = ContinuumField::from_eigenfunction(&q, rho, f);
                    let rq = continuum_dirichlet_d(f, &q) / field.inner(&field);
                    assert!((rq / e.eigenvalue - 1.0).abs() < 0.05, "{rq} vs {}", e.eigenvalue);
                }
            }
        }
    }

    #[test]
    fn alignment_of_members_and_strangers() {
        let t = ManifoldSpec::torus(2).unwrap();
        let u = DensitySpec::uniform(&t);
        let q = quadrature_cloud(&t, &u, 10000, 4).unwrap();
        let tab = crate::geometry::analytic_spectrum(&t, &u, LaplacianKind::Unnormalized, 6).unwrap();
        let member = ContinuumField::from_eigenfunction(&q, Rho::One, &wave(&[0, 1], Phase::Sin));
        let rep = align_eigenspace(&member, &tab, 1, &q).unwrap();
        assert!(rep.subspace_error < 1e-10);
        assert_eq!(rep.cluster, 4);
        assert!((rep.gap - 4.0 * PI * PI).abs() < 1e-9);

        let stranger = ContinuumField::from_eigenfunction(&q, Rho::One, &wave(&[1, 1], Phase::Cos));
        let rep = align_eigenspace(&stranger, &tab, 1, &q).unwrap();
        assert!(rep.subspace_error >= 0.99, "{}", rep.subspace_error);

        let zero = member.scaled(0.0);
        assert!(align_eigenspace(&zero, &tab, 1, &q).is_err());
    }

    #[test]
    fn energy_bounded_by_dirichlet_form() {
        let t = ManifoldSpec::torus(2).unwrap();
        let q = quadrature_cloud(&t, &DensitySpec::uniform(&t), 8000, 6).unwrap();
        let kernel = make_kernel(KernelProfile::Gauss, 2).unwrap();
        let r = 0.1;
        let f = wave(&[1, 0], Phase::Cos);
        let field = ContinuumField::from_eigenfunction(&q, Rho::One, &f);
        let e = nonlocal_energy(&field, &q, &kernel, r).unwrap();
        let bound = kernel.sigma * r.powi(4) * continuum_dirichlet_d(&f, &q);
        assert!(e > 0.0 && e <= 1.1 * bound, "{e} vs {bound}");
        let c = ContinuumField::from_fn(&q, Rho::One, |_| 3.0);
        assert_eq!(nonlocal_energy(&c, &q, &kernel, r).unwrap(), 0.0);
    }

    #[test]
    fn kde_single_point() {
        let t = ManifoldSpec::torus(2).unwrap();
        let x = sample(&t, &DensitySpec::uniform(&t), 1, 0).unwrap();
        let kernel = make_kernel(KernelProfile::Indicator, 2).unwrap();
        let h = 0.3;
        let g = crate::graph::build_graph(&x, h, &kernel).unwrap();
        let rep = kde_report(&g, &x, None);
        let want = (kernel.eta(0.0) / (h * h) - 1.0).abs();
        assert!((rep.max_error - want).abs() < 1e-12);
    }
}
