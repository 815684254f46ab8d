use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("squared distance involving row {row} overflows to a non-finite value")]
    CostOverflow { row: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("size mismatch: {left} points vs {right} points")]
    SizeMismatch { left: usize, right: usize },
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("direction is not a unit vector (norm {norm})")]
    NotUnit { norm: f64 },
    #[error("n = {n} exceeds the brute-force limit n <= {max}; use sgw for larger clouds")]
    TooLarge { n: usize, max: usize },
    #[error("invalid mapping: {0}")]
    InvalidMapping(String),
    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),
    #[error("label {label} out of range for {classes} classes (row {row})")]
    LabelOutOfRange { row: usize, label: usize, classes: usize },
    #[error("feature value {value} at row {row} outside [0, 1]")]
    OutOfUnitRange { row: usize, value: f64 },
    #[error("non-finite gradient for parameter {0}; step aborted")]
    NonFiniteGradient(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: String) -> Self {
        Error::Shape { op, detail }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
