use thiserror::Error;

/// Errors raised while building, validating or evaluating factor graphs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("factor graph contains a cycle (closed by factor {factor:?})")]
    CycleDetected { factor: String },

    #[error("factor {factor:?} has {found} values, expected {expected} (product of scope cardinalities)")]
    ScopeMismatch {
        factor: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown variable {0:?}")]
    UnknownVariable(String),

    #[error("variable {0:?} does not appear in any factor scope")]
    UncoveredVariable(String),

    #[error("variable {variable:?} appears more than once in the scope of factor {factor:?}")]
    DuplicateScopeVariable { factor: String, variable: String },

    #[error("factor {0:?} has an empty scope")]
    EmptyScope(String),

    #[error("variable {0:?} has cardinality 0")]
    ZeroCardinality(String),

    #[error("factor {factor:?} entry {index} is {value}, expected a finite nonnegative value")]
    NegativeValue {
        factor: String,
        index: usize,
        value: f64,
    },

    #[error("value {value} at scope position {position} is outside its domain of size {cardinality}")]
    OutOfDomain {
        position: usize,
        value: usize,
        cardinality: usize,
    },

    #[error("message {0} consumed before it was computed")]
    MissingDependency(String),

    #[error("companion table of factor {factor:?} has {found} entries, expected {expected}")]
    CompanionMismatch {
        factor: String,
        expected: usize,
        found: usize,
    },

    #[error("companion entry {index} of factor {factor:?} is undefined but the factor value is nonzero")]
    UndefinedCompanion { factor: String, index: usize },

    #[error("observations have zero probability (Z = {z_description}); entropy is undefined")]
    ZeroEvidence { z_description: String },

    #[error("M-step is degenerate: H_a = {h_a}, H_b = {h_b}")]
    DegenerateMStep { h_a: f64, h_b: f64 },

    #[error("gradient quotient undefined for factor {factor:?} entry {index} component {component}: value is 0 but gradient is nonzero")]
    UndefinedQuotient {
        factor: String,
        index: usize,
        component: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid hidden Markov model: {0}")]
    InvalidHmm(String),

    #[error("brute-force enumeration over {assignments} joint assignments exceeds the limit of {limit}")]
    TooLarge { assignments: u128, limit: u128 },

    #[error("model cannot be evaluated at a new parameter point: {0}")]
    NotEvaluable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{path}: {source}")]
    AtPath {
        path: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with the location (a JSON key path) it refers to.
    pub fn at(self, path: impl Into<String>) -> Self {
        Error::AtPath {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::CycleDetected { .. } => "CycleDetected",
            Error::ScopeMismatch { .. } => "ScopeMismatch",
            Error::UnknownVariable(_) => "UnknownVariable",
            Error::UncoveredVariable(_) => "UncoveredVariable",
            Error::DuplicateScopeVariable { .. } => "DuplicateScopeVariable",
            Error::EmptyScope(_) => "EmptyScope",
            Error::ZeroCardinality(_) => "ZeroCardinality",
            Error::NegativeValue { .. } => "NegativeValue",
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::MissingDependency(_) => "MissingDependency",
            Error::CompanionMismatch { .. } => "CompanionMismatch",
            Error::UndefinedCompanion { .. } => "UndefinedCompanion",
            Error::ZeroEvidence { .. } => "ZeroEvidence",
            Error::DegenerateMStep { .. } => "DegenerateMStep",
            Error::UndefinedQuotient { .. } => "UndefinedQuotient",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidHmm(_) => "InvalidHmm",
            Error::TooLarge { .. } => "TooLarge",
            Error::NotEvaluable(_) => "NotEvaluable",
            Error::Parse(_) => "ParseError",
            Error::Usage(_) => "Usage",
            Error::Io(_) => "IoError",
            Error::AtPath { source, .. } => source.kind(),
        }
    }

    /// JSON key path attached by the document layer, if any.
    pub fn path(&self) -> Option<&str> {
        match self {
            Error::AtPath { path, .. } => Some(path),
            _ => None,
        }
    }

    /// The innermost error, with path wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPath { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors raised while evaluating a well-formed model, as opposed
    /// to malformed input.
    pub fn is_runtime(&self) -> bool {
        matches!(
            self.root(),
            Error::ZeroEvidence { .. }
                | Error::DegenerateMStep { .. }
                | Error::UndefinedQuotient { .. }
                | Error::MissingDependency(_)
                | Error::TooLarge { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
