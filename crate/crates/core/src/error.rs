use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("point {re}+{im}i does not lie on the curve")]
    PointOffCurve { re: f64, im: f64 },
    #[error("invalid input: {0}")]
    Domain(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("operator is not bounded on the space: {0}")]
    Unbounded(String),
    #[error("symbol is degenerate at parameter {param}: {detail}")]
    DegenerateSymbol { param: f64, detail: String },
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("truncation n={n} is too small, need at least {required}")]
    InsufficientTruncation { n: usize, required: usize },
    #[error("sample sets are not aligned: {0}")]
    Alignment(String),
    #[error("unsupported entry: {0}")]
    UnsupportedEntry(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("numeric evidence is inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, Error>;
