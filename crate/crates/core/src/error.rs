use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("quadratic form is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not unimodular (determinant {0})")]
    NotUnimodular(String),
    #[error("vector {0:?} is not primitive")]
    NotPrimitive(Vec<i64>),
    #[error("cell is empty")]
    EmptyCell,
    #[error("vector {0:?} is zero")]
    ZeroVector(Vec<i64>),
    #[error("cone contains a line")]
    NotPointed,
    #[error("cone has {0} generators, at most 128 are supported")]
    TooManyGenerators(usize),
    #[error("facet is not incident to the cell: {0}")]
    FacetNotIncident(&'static str),
    #[error("cell is degenerate (barycenter form is singular)")]
    DegenerateCell,
    #[error("map does not stabilize the cell")]
    NotStabilizing,
    #[error("map is not a witness for the given pair of cells")]
    NotAWitness,
    #[error("neighbor search did not terminate after {0} steps")]
    SearchDivergence(usize),
    #[error("rank {0} is outside the supported range 2..=6")]
    UnsupportedRank(usize),
    #[error("d_{lower} o d_{upper} is nonzero")]
    NonzeroSquare { lower: usize, upper: usize },
    #[error("missing witness data for cell {0} in dimension {1}")]
    MissingWitness(usize, usize),
    #[error("invalid record: {0}")]
    Parse(String),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
