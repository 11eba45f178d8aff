use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a raw input row was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum RowFault {
    MissingField,
    BadTimestamp,
    BadDate,
    NonNumeric,
    NegativeValue,
    Duplicate,
    UnknownOperation,
    UnknownSite,
    UnknownGroup,
}

impl fmt::Display for RowFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} is {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degrees of freedom {nu} must exceed dim - 1 = {min}")]
    InvalidDegreesOfFreedom { nu: f64, min: f64 },
    #[error("value {value} outside support {support}")]
    OutOfSupport { value: f64, support: String },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("time index {t} out of range (valid {min}..{max})")]
    TimeIndexOutOfRange { t: usize, min: usize, max: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parameter constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("no finite-density initial point found after {attempts} attempts")]
    AllInitializationsFailed { attempts: usize },
    #[error("draws have zero variance")]
    ZeroVariance,
    #[error("need at least {needed} draws, got {got}")]
    InsufficientDraws { needed: usize, got: usize },
    #[error("row {row}: {reason}")]
    ParseError { row: usize, reason: RowFault },
    #[error("input file has no data rows")]
    EmptyFile,
    #[error("turbidity and wind series share no dates")]
    NoDateOverlap,
    #[error("site {0} has no DredgingSite/DumpSite classification")]
    UnclassifiedSite(String),
    #[error("covariate missing on {0}")]
    MissingCovariate(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable kind, used in CLI error payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::NotSymmetric => "NotSymmetric",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidDegreesOfFreedom { .. } => "InvalidDegreesOfFreedom",
            Error::OutOfSupport { .. } => "OutOfSupport",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::TimeIndexOutOfRange { .. } => "TimeIndexOutOfRange",
            Error::InvalidDataset(_) => "InvalidDataset",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::ConstraintViolation(_) => "ConstraintViolation",
            Error::AllInitializationsFailed { .. } => "AllInitializationsFailed",
            Error::ZeroVariance => "ZeroVariance",
            Error::InsufficientDraws { .. } => "InsufficientDraws",
            Error::ParseError { .. } => "ParseError",
            Error::EmptyFile => "EmptyFile",
            Error::NoDateOverlap => "NoDateOverlap",
            Error::UnclassifiedSite(_) => "UnclassifiedSite",
            Error::MissingCovariate(_) => "MissingCovariate",
            Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => "FileNotFound",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }

    /// True when the error stems from user input rather than a runtime failure.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::AllInitializationsFailed { .. } | Error::ZeroVariance | Error::NotPositiveDefinite { .. })
    }
}
