use thiserror::Error;

use crate::metrics::MetricViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("start vertex {start} out of range for {n} vertices")]
    InvalidStart { start: usize, n: usize },
    #[error("instance has no vertices")]
    Empty,
    #[error("non-finite value {value} in metric input at position {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("negative distance or edge weight {value} at position {index}")]
    Negative { index: usize, value: f64 },
    #[error("distance matrix is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("tree edge ({u}, {v}) references a vertex outside 0..{n}")]
    TreeVertexOutOfRange { u: usize, v: usize, n: usize },
    #[error("tree edge ({u}, {v}) closes a cycle")]
    TreeCycle { u: usize, v: usize },
    #[error("tree edge list is disconnected ({components} components)")]
    TreeDisconnected { components: usize },
    #[error("distance table violates metric axioms ({} violations, first: {:?})", .0.len(), .0.first())]
    NotAMetric(Vec<MetricViolation>),

    #[error("invalid route: {0}")]
    InvalidRoute(String),
    #[error("invalid objective: {0}")]
    InvalidObjective(String),
    #[error("objective {0} is not supported by this solver")]
    UnsupportedObjective(String),

    #[error("{op} supports at most {max} vertices, got {n}")]
    TooLarge { op: &'static str, n: usize, max: usize },
    #[error("k = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lambda search failed to bracket size {k} within {iterations} iterations")]
    NoBracket { k: usize, iterations: usize },
    #[error("tree of weight {weight} exceeds budget {budget}")]
    BudgetViolated { budget: f64, weight: f64 },

    #[error("invalid segmented spec: {0}")]
    InvalidSegmentedSpec(String),
    #[error("segmented oracle inconsistent on counts {counts:?} / deadlines {deadlines:?}: witness {witness:?}")]
    OracleInconsistent {
        counts: Vec<usize>,
        deadlines: Vec<f64>,
        witness: Vec<usize>,
    },

    #[error("interval route enumeration would produce {count} candidates (cap {cap})")]
    CandidateExplosion { count: u128, cap: u128 },
}
