use thiserror::Error;

/// Errors raised by the automaton engine and the quantum lift.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid modulus {0}: must be at least 2")]
    InvalidModulus(u32),
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("invalid site {site:?} for extents {extents:?}")]
    InvalidSite { site: Vec<i64>, extents: Vec<usize> },
    #[error("perturbation {delta} is zero modulo {modulus}")]
    DegeneratePerturbation { delta: i64, modulus: u32 },
    #[error("Hilbert space dimension {required} exceeds cap {cap}; raise the cap to at least {required}")]
    DimensionCap { required: u128, cap: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("truncation order {0} outside 1..=4")]
    InvalidOrder(usize),
    #[error("operator is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("expected a {expected} operator, found {found}")]
    ClassMismatch { expected: String, found: String },
    #[error("invalid bipartition: {0}")]
    InvalidCut(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable identifier for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidLattice(_) => "invalid-lattice",
            Error::InvalidModulus(_) => "invalid-modulus",
            Error::InvalidRule(_) => "invalid-rule",
            Error::InvalidSite { .. } => "invalid-site",
            Error::DegeneratePerturbation { .. } => "degenerate-perturbation",
            Error::DimensionCap { .. } => "dimension-cap",
            Error::DimensionMismatch(..) => "dimension-mismatch",
            Error::InvalidOrder(_) => "invalid-order",
            Error::NotUnitary(_) => "not-unitary",
            Error::ClassMismatch { .. } => "class-mismatch",
            Error::InvalidCut(_) => "invalid-cut",
            Error::InvalidState(_) => "invalid-state",
            Error::InvariantViolated(_) => "invariant-violated",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
