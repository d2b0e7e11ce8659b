use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate vertex label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown vertex label `{0}`")]
    UnknownLabel(String),
    #[error("edge ({0}, {1}) has non-positive weight {2}")]
    NonpositiveWeight(String, String, f64),
    #[error("vertex `{0}` has non-positive measure {1}")]
    NonpositiveMeasure(String, f64),
    #[error("self-loop at vertex `{0}`")]
    SelfLoop(String),
    #[error("edge ({0}, {1}) given with conflicting weights {2} and {3}")]
    AsymmetricInput(String, String, f64, f64),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("empty vertex subset")]
    EmptySubset,
    #[error("vertex index {0} out of range")]
    UnknownIndex(usize),
    #[error("no magnetic phase for edge ({0}, {1})")]
    MissingEdgePhase(usize, usize),
    #[error("no connection matrix for edge ({0}, {1})")]
    MissingEdgeMatrix(usize, usize),
    #[error("potential at vertex {0} is not Hermitian (deviation {1:.3e})")]
    NonHermitian(usize, f64),
    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("invalid connection: {0}")]
    InvalidConnection(String),
    #[error("dimension {dim} exceeds dense cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("bad coefficients: {0}")]
    BadCoefficients(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DuplicateLabel(_) => "DuplicateLabel",
            Error::UnknownLabel(_) => "UnknownLabel",
            Error::NonpositiveWeight(..) => "NonpositiveWeight",
            Error::NonpositiveMeasure(..) => "NonpositiveMeasure",
            Error::SelfLoop(_) => "SelfLoop",
            Error::AsymmetricInput(..) => "AsymmetricInput",
            Error::BadParams(_) => "BadParams",
            Error::EmptySubset => "EmptySubset",
            Error::UnknownIndex(_) => "UnknownIndex",
            Error::MissingEdgePhase(..) => "MissingEdgePhase",
            Error::MissingEdgeMatrix(..) => "MissingEdgeMatrix",
            Error::NonHermitian(..) => "NonHermitian",
            Error::RankMismatch { .. } => "RankMismatch",
            Error::InvalidConnection(_) => "InvalidConnection",
            Error::DimensionCap { .. } => "DimensionCap",
            Error::NumericalFailure(_) => "NumericalFailure",
            Error::BadCoefficients(_) => "BadCoefficients",
            Error::InvariantViolation(_) => "InvariantViolation",
            Error::Parse(_) => "Parse",
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NumericalFailure(_) | Error::InvariantViolation(_) | Error::DimensionCap { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
