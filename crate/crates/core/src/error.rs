use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty probability vector")]
    EmptySpace,
    #[error("probability at outcome {index} is not strictly positive ({value})")]
    NonPositiveProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("duplicate outcome label {0:?}")]
    DuplicateLabel(String),
    #[error("object has {found} outcomes but the space has {expected}")]
    SpaceMismatch { expected: usize, found: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("outcome count {count} exceeds cap {cap}")]
    CapExceeded { count: usize, cap: usize },
    #[error("sigma-fields are not independent")]
    NotIndependent,
    #[error("join of the given sigma-fields is not the full sigma-field")]
    NotGenerating,
    #[error("trivial sigma-field among the generators")]
    TrivialGenerator,
    #[error("sigma-field is not an element of the algebra")]
    NotAnElement,
    #[error("no completion to a partition of unity is available")]
    NoCompletion,
    #[error("not a partition of unity: {0}")]
    NotPartitionOfUnity(String),
    #[error("noise axioms fail: {0}")]
    AxiomFailure(String),
    #[error("numerical rank ambiguity at element {element}: relative residual {residual:e}")]
    RankAmbiguity { element: usize, residual: f64 },
    #[error("value {value} out of range for {what}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("not a probability on the spectral space: {0}")]
    NotAProbability(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("function is not in the first chaos (residual {0:e})")]
    NotFirstChaos(f64),
    #[error("chain is not nested: {0}")]
    NotNested(String),
    #[error("invalid voting rule: {0}")]
    InvalidRule(String),
    #[error("scenario format: {0}")]
    Format(String),
}
