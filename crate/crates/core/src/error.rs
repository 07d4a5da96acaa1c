use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {index} is off the manifold (deviation {deviation:.3e})")]
    OffManifold { index: usize, deviation: f64 },

    #[error("invalid density bound: {0}")]
    InvalidDensityBound(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("graph has isolated vertices under a degree-normalized Laplacian: {vertices:?}")]
    IsolatedVertices { vertices: Vec<usize> },

    #[error("smoothing radius too small: quadrature point {index} has no neighbor within r = {radius}")]
    RadiusTooSmall { index: usize, radius: f64 },

    #[error("bandwidth regime violated: h - 2*eps = {margin} is not positive (requires (m+5) eps < h)")]
    RegimeViolation { margin: f64 },

    #[error("quadrature too coarse: Gram matrix condition number {condition:.3e} exceeds 1e8")]
    QuadratureTooCoarse { condition: f64 },

    #[error("continuum oracle did not converge: relative change {change:.3e} under cutoff doubling")]
    OracleNotConverged { change: f64 },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
