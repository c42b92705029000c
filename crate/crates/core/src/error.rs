use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a form needs at least 3 coefficients, got {0}")]
    TooFewVariables(usize),
    #[error("coefficient {index} is zero")]
    ZeroCoefficient { index: usize },
    #[error("coefficient {index} is too large ({value}); |A_i| must be below 2^31")]
    CoefficientTooLarge { index: usize, value: i64 },
    #[error("coefficients all have the same sign; the form is definite")]
    Definite,
    #[error("coefficients share the factor {0}; a primitive form was requested")]
    NotPrimitive(u64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("{what} needs {required}, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: u128,
        budget: u128,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("discriminant is a perfect square")]
    SquareDiscriminant,
    #[error("unsupported weight: {0}")]
    UnsupportedWeight(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("series diverges: {0}")]
    Divergent(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
