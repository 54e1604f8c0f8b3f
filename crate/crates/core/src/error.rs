use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("grid size {0} is not a power of two >= 8")]
    BadGridSize(usize),
    #[error("grid radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("sigma {0} outside the admissible range {1}")]
    SigmaRange(f64, &'static str),
    #[error("grid or dimension mismatch: {0}")]
    Mismatch(String),
    #[error("invalid exponent: {0}")]
    Exponent(String),
    #[error("field has nonzero mean {0:e}; operation requires mean-zero data")]
    NonzeroMean(f64),
    #[error("symmetry tag violated: {0}")]
    Symmetry(String),
    #[error("unknown operator name '{0}'")]
    UnknownOperator(String),
    #[error("missing operand: {0}")]
    MissingOperand(&'static str),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("no sign change on bracket for x = {0}")]
    NoSignChange(f64),
}

pub type Result<T> = std::result::Result<T, LabError>;
