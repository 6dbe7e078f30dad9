use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid index tuple {indices:?} for dimension {dim}")]
    InvalidTuple { indices: Vec<usize>, dim: usize },

    #[error("operation requires degree >= 1")]
    DegreeZero,

    #[error("expected a degree-{expected} form, got degree {found}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("function is not polynomial: {0}")]
    NotPolynomial(String),

    #[error("no symbolic derivative for {0}")]
    NoSymbolicDerivative(&'static str),

    #[error("form is not closed: d-coefficient on ({tuple}) is {coefficient}")]
    NotClosed { tuple: String, coefficient: String },

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("invalid simplicial complex: {0}")]
    InvalidComplex(String),

    #[error("degenerate simplex {simplex:?}")]
    DegenerateSimplex { simplex: Vec<usize> },

    #[error("coverage gap at {point:?} after {subdivisions} subdivision(s)")]
    CoverageGap { point: Vec<f64>, subdivisions: usize },

    #[error("ball {family}:{index} has no flat local chart: {reason}")]
    CurvedChart { family: usize, index: usize, reason: String },

    #[error("regular-subspace construction failed at stage {stage}: rank {achieved} of {required}")]
    StageFailed { stage: usize, achieved: usize, required: usize },

    #[error("map is not an immersion at {point:?}: rank {rank} < {required}")]
    NotImmersion { point: Vec<f64>, rank: usize, required: usize },

    #[error("serialization: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
