use thiserror::Error;

/// Errors produced by the geometry engine.
#[derive(Error, Debug)]
pub enum QbhError {
    #[error("dimension mismatch: ({n1},{s1}) vs ({n2},{s2})")]
    DimensionMismatch { n1: usize, s1: usize, n2: usize, s2: usize },

    #[error("singularity in factor `{factor}` at base point")]
    Singularity { factor: String },

    #[error("jet order {requested} exceeds available order {available}")]
    OrderError { requested: usize, available: usize },

    #[error("non-finite evaluation inside finite-difference stencil at offset ({dx},{dy})")]
    StencilError { dx: f64, dy: f64 },

    #[error("invalid parameter: {0}")]
    ParameterError(String),

    #[error("point ({x},{y}) lies on the excluded singular locus")]
    ExcludedPoint { x: f64, y: f64 },

    #[error("degenerate induced metric at ({x},{y}): det g = {det}")]
    DegenerateMetric { x: f64, y: f64, det: f64 },

    #[error("constraint `{name}` violated: residual {residual}")]
    ConstraintViolation { name: String, residual: f64 },

    #[error("point is not marginally trapped: |<H,H>| = {h_norm_sq}, |H| = {h_norm}")]
    NotMarginallyTrapped { h_norm_sq: f64, h_norm: f64 },

    #[error("Lagrangian condition violated: JH has tangent defect {residual}")]
    LagrangianViolation { residual: f64 },

    #[error("family `{family}` rejected: {reason}")]
    FamilyError { family: String, reason: String },

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QbhError>;
