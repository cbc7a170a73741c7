use thiserror::Error;

/// Errors raised by the manifold constructions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid space specification: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not Hermitian positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("frame is not L2-orthonormal (residual {residual:.3e})")]
    NotOrthonormal { residual: f64 },

    #[error("operator is not L2-self-adjoint (residual {residual:.3e})")]
    NotSelfAdjoint { residual: f64 },

    #[error("spectrum [{min:.6e}, {max:.6e}] outside the admissible interval")]
    SpectrumOutOfRange { min: f64, max: f64 },

    #[error("series did not reach tolerance after {terms} terms (tail bound {tail:.3e})")]
    SeriesNotConverged { terms: usize, tail: f64 },

    #[error("operator is not in the group U (residual {residual:.3e})")]
    NotInGroup { residual: f64 },

    #[error("operator is not in the Lie algebra u (residual {residual:.3e})")]
    NotInLieAlgebra { residual: f64 },

    #[error("operator is not an L2-partial isometry with the reference initial space (residual {residual:.3e})")]
    NotStiefel { residual: f64 },

    #[error("operator is not a rank-{rank} L2-orthogonal projection (residual {residual:.3e})")]
    NotProjection { rank: usize, residual: f64 },

    #[error("operators carry different reference frames")]
    ReferenceMismatch,

    #[error("operator is singular")]
    Singular,

    #[error("neighborhood violation: {what} = {value:.6e} is not below {bound:.6e}")]
    NeighborhoodViolation {
        what: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("restricted operator is rank deficient (eigenvalue {eigenvalue:.3e})")]
    RankDeficiency { eigenvalue: f64 },

    #[error("principal logarithm unavailable: ||U - I|| = {distance:.6e} >= 1")]
    LogUnavailable { distance: f64 },

    #[error("invalid curve samples: {0}")]
    InvalidCurve(String),

    #[error("invalid norm specification: {0}")]
    InvalidNorm(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed matrix data: {0}")]
    MalformedMatrix(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_of(m: &crate::linalg::CMat) -> String {
    format!("{}x{}", m.nrows(), m.ncols())
}
