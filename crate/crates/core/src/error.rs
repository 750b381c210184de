use thiserror::Error;

/// Errors produced by the fitting and regression routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("frequency at index {index} is not strictly positive ({value} Hz)")]
    NonPositiveFrequency { index: usize, value: f64 },

    #[error("array lengths differ: {freqs} frequencies, {re} real, {im} imaginary samples")]
    MismatchedLengths { freqs: usize, re: usize, im: usize },

    #[error("non-finite value in {field} at index {index}")]
    NonFiniteValue { field: &'static str, index: usize },

    #[error("too few points: got {got}, need at least {min}")]
    TooFewPoints { got: usize, min: usize },

    #[error("duplicate frequency {value} Hz")]
    DuplicateFrequency { value: f64 },

    #[error("age must be finite and nonnegative, got {0}")]
    InvalidAge(f64),

    #[error("cost function is not finite at an initial simplex vertex")]
    NonFiniteCost,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("regime {regime} is starved (total responsibility {mass:.3e})")]
    DegenerateFit { regime: usize, mass: f64 },

    #[error("segmentation has {boundaries} boundaries and {segments} distinct segments; expected 2 and 3")]
    BoundaryCountMismatch { boundaries: usize, segments: usize },

    #[error("feature column {column} is constant on the training rows")]
    ConstantColumn { column: usize },

    #[error("feature subset is empty")]
    EmptySubset,

    #[error("no feasible feature subset")]
    NoFeasibleSubset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}

impl Error {
    /// Variant name, used as a stable flag in tabular outputs.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPositiveFrequency { .. } => "NonPositiveFrequency",
            Error::MismatchedLengths { .. } => "MismatchedLengths",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::DuplicateFrequency { .. } => "DuplicateFrequency",
            Error::InvalidAge(_) => "InvalidAge",
            Error::NonFiniteCost => "NonFiniteCost",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::DegenerateFit { .. } => "DegenerateFit",
            Error::BoundaryCountMismatch { .. } => "BoundaryCountMismatch",
            Error::ConstantColumn { .. } => "ConstantColumn",
            Error::EmptySubset => "EmptySubset",
            Error::NoFeasibleSubset => "NoFeasibleSubset",
            Error::InvalidDataset(_) => "InvalidDataset",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
