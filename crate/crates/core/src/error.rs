use thiserror::Error;

use crate::reference::ElementType;

#[derive(Debug, Error)]
pub enum HdgError {
    #[error("invalid mesh request: {0}")]
    InvalidMesh(String),

    #[error("unsupported reference element {element:?} of degree {degree}")]
    UnsupportedElement { element: ElementType, degree: usize },

    #[error("quadrature order {order} is outside the tabulated range 1..={max}")]
    QuadratureOrder { order: usize, max: usize },

    #[error("inverted or degenerate element {element:?} (detJ = {det_j:e})")]
    InvertedElement { element: Option<usize>, det_j: f64 },

    #[error("normal vector is not of unit length (|n| = {0})")]
    NonUnitNormal(f64),

    #[error("expected a Voigt vector of length {expected}, got {found}")]
    VoigtLength { expected: usize, found: usize },

    #[error("local saddle factorization failed on element {element}: {reason}")]
    LocalFactorization { element: usize, reason: String },

    #[error("missing trace data on face {face} of element {element}")]
    MissingTrace { element: usize, face: usize },

    #[error("dof map inconsistency: {0}")]
    DofMap(String),

    #[error("pure-Dirichlet pressure constraint: {0}")]
    PureDirichlet(String),

    #[error("global factorization failed ({dofs} dofs, {nnz} nonzeros): {reason}")]
    GlobalFactorization { dofs: usize, nnz: usize, reason: String },

    #[error("post-process system is singular on element {element}")]
    PostprocessSingular { element: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HdgError>;
