//! Random geometric graph Laplacians on model manifolds, and the machinery
//! for comparing their spectra with the weighted Laplace–Beltrami operator:
//! sampling, graph assembly, sparse eigensolvers, ∞-transport estimates,
//! discrete/continuum transfer operators and reproducible convergence studies.

pub mod bridge;
pub mod eigen;
pub mod error;
pub mod geometry;
pub mod graph;
mod grid;
pub mod kernel;
pub mod laplacian;
pub mod quadrature;
pub mod study;
pub mod transport;

pub use error::{Error, Result};
