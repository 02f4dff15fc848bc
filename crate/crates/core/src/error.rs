use crate::expr::ParseError;
use crate::jet::JetError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("fundamental tensor is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("|y| = {norm:e} is below the slit-bundle guard {guard:e}")]
    SlitBundle { norm: f64, guard: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension must be odd and at least 3, got {0}")]
    InvalidDimension(usize),
    #[error("phi-basis is degenerate (smallest singular value {0:e})")]
    DegenerateBasis(f64),
    #[error("transverse edge is parallel to xi (projected norm {0:e})")]
    DegenerateEdge(f64),
    #[error("covariant derivative needs a tensor field, got a pointwise tensor")]
    PointwiseTensor,
    #[error("singular matrix while inverting jets (pivot {0:e})")]
    Singular(f64),
    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
