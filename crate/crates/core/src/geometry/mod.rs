//! Model manifolds, densities on them, sampling, and closed-form spectra of
//! the weighted Laplace–Beltrami operator.

mod density;
mod io;
mod manifold;
mod sampling;
mod spectrum;

pub use density::{DensityForm, DensitySpec};
pub use io::{read_cloud, read_cloud_csv, write_cloud, write_cloud_csv, CLOUD_MAGIC, CLOUD_VERSION};
pub use manifold::{sphere_area, unit_ball_volume, ManifoldKind, ManifoldSpec, ON_MANIFOLD_TOL};
pub use sampling::{quadrature_cloud, sample, PointCloud};
pub use spectrum::{
    analytic_spectrum, sphere_multiplicity, Eigenfunction, FourierTerm, Phase, SpectrumEntry,
    SpectrumTable,
};

pub(crate) use manifold::{euclidean, periodic_gap};
