use thiserror::Error;

/// A single failed metric axiom found by [`crate::metric::validate_metric`].
#[derive(Debug, Clone, PartialEq)]
pub enum MetricViolation {
    Diagonal { i: usize, value: f64 },
    Negative { i: usize, j: usize, value: f64 },
    Asymmetric { i: usize, j: usize },
    Triangle { i: usize, j: usize, k: usize, excess: f64 },
}

impl std::fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricViolation::Diagonal { i, value } => write!(f, "d({i},{i}) = {value} != 0"),
            MetricViolation::Negative { i, j, value } => write!(f, "d({i},{j}) = {value} < 0"),
            MetricViolation::Asymmetric { i, j } => write!(f, "d({i},{j}) != d({j},{i})"),
            MetricViolation::Triangle { i, j, k, excess } => {
                write!(f, "d({i},{k}) exceeds d({i},{j}) + d({j},{k}) by {excess:e}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("distance table is not square: row {row} has {len} entries, expected {n}")]
    NonSquare { row: usize, len: usize, n: usize },

    #[error("non-finite distance at ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("metric axioms violated: {} violation(s), first: {}", .0.len(), .0[0])]
    MetricViolations(Vec<MetricViolation>),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("source points {i} and {j} coincide but carry different values")]
    InfiniteLipschitz { i: usize, j: usize },

    #[error("maps are defined on different domains")]
    DomainMismatch,

    #[error("point set is empty")]
    EmptySet,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver hit the iteration cap of {iterations} with gap {gap:e}")]
    IterationCap { iterations: usize, gap: f64 },

    #[error("extension failed at source point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("empty feasible set at step {step} (source point {index}): {detail}")]
    Infeasible {
        step: usize,
        index: usize,
        detail: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("instance format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_point(index: usize, err: Error) -> Error {
        Error::AtPoint {
            index,
            source: Box::new(err),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
