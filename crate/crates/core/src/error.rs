use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("degenerate metric on `{manifold}` at {point:?}: det g = {det:e}")]
    DegenerateMetric {
        manifold: String,
        point: Vec<f64>,
        det: f64,
    },
    #[error("metric on `{manifold}` is not positive definite at {point:?}")]
    NotPositiveDefinite { manifold: String, point: Vec<f64> },
    #[error("point {point:?} lies outside the domain of `{manifold}`")]
    OutsideDomain { manifold: String, point: Vec<f64> },
    #[error("{what}: expected {expected}, found {found}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("immersion rank deficit at {point:?} (det of induced metric {det:e})")]
    ImmersionRank { point: Vec<f64>, det: f64 },
    #[error("tangent frame degenerates at {point:?}: orthonormalization pivot {pivot:e}")]
    FrameDegenerate { point: Vec<f64>, pivot: f64 },
    #[error("variation field is not normal at {point:?}: tangential part {tangential:e}")]
    NotNormal { point: Vec<f64>, tangential: f64 },
    #[error("source metric differs from the induced metric by {deviation:e} at {point:?}")]
    NotRiemannianImmersion { point: Vec<f64>, deviation: f64 },
    #[error("non-finite integrand at node {point:?}")]
    NonFiniteIntegrand { point: Vec<f64> },
    #[error("Euler characteristic estimate {value} is {gap:e} away from an integer")]
    EulerGap { value: f64, gap: f64 },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
