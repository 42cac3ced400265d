use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("diagrams have different sizes in homology dimension {hom_dim}: {left} vs {right}")]
    SizeMismatch {
        hom_dim: usize,
        left: usize,
        right: usize,
    },

    #[error("p must satisfy p >= 1 (or be infinite), got {0}")]
    InvalidP(f64),

    #[error("point has non-finite coordinates ({birth}, {death}); truncate or drop before comparing")]
    NonFiniteCoordinate { birth: f64, death: f64 },

    #[error("homology dimension {dim} exceeds maximum {max}")]
    DimOutOfRange { dim: usize, max: usize },

    #[error("point lacks an extended-persistence type but the featurization encodes types")]
    MissingExtType,

    #[error("batch of diagrams is empty")]
    EmptyBatch,

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("duplicate points at indices {0} and {1}")]
    DuplicatePoints(usize, usize),

    #[error("filtration is not monotone: simplex {child} has value {child_value} below its face value {face_value}")]
    NonMonotoneFiltration {
        child: usize,
        child_value: f64,
        face_value: f64,
    },

    #[error("distance matrix is not a metric candidate: {0}")]
    NotAMetric(&'static str),

    #[error("input size {n} exceeds the guard {max}")]
    TooLarge { n: usize, max: usize },

    #[error("diffusion time must be positive, got {0}")]
    NonPositiveT(f64),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid curvature {0}: geodesic disc of radius 1 requires K < pi^2")]
    InvalidCurvatureRadius(f64),

    #[error("step count {n} exceeds the precision guard {max}")]
    GuardExceeded { n: usize, max: usize },

    #[error("parse error in {file} at line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("inconsistent indices in {file}: {message}")]
    InconsistentIndices { file: String, message: String },

    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("softmax row {row} has no live positions")]
    AllMaskedRow { row: usize },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NotScalar(Vec<usize>),

    #[error("non-finite gradient in parameter {0}; step aborted")]
    NonFiniteGradient(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("need at least {needed} items, got {got}")]
    TooFewItems { needed: usize, got: usize },

    #[error("saliency scores misaligned with diagram: {scores} scores for {points} points")]
    Misalignment { scores: usize, points: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Whether the error reflects invalid user input (as opposed to a
    /// runtime failure). The CLI maps this to exit code 1 vs 2.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::Diverged { .. } | Error::NonFiniteGradient(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
