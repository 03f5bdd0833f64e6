use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {0} is outside the domain s >= 0")]
    Domain(f64),
    #[error("unsupported derivative order {0}")]
    UnsupportedOrder(u8),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("field contains a non-finite value at node {0}")]
    PoisonedField(usize),
    #[error("nonlinear iteration did not converge after {iterations} iterations (defect {defect:e})")]
    IterationFailure { iterations: usize, defect: f64 },
    #[error("series has {got} records, at least {needed} required")]
    InsufficientSeries { needed: usize, got: usize },
    #[error("not applicable to the focusing sign: {0}")]
    FocusingSign(&'static str),
    #[error("not applicable to the defocusing sign: {0}")]
    DefocusingSign(&'static str),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no witness constants available: {0}")]
    NoWitness(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),
    #[error("missing checkpoint: {0}")]
    MissingCheckpoint(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
