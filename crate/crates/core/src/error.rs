use thiserror::Error;

/// DIMACS parse failure, tagged with the 1-based line it occurred on.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("variable count mismatch: {left} vs {right}")]
    VarCountMismatch { left: usize, right: usize },

    #[error("assignment has length {got}, expected {expected}")]
    AssignmentLength { expected: usize, got: usize },

    #[error("variable index {index} out of range for {num_vars} variables")]
    VarOutOfRange { index: usize, num_vars: usize },

    #[error("invalid spin value {0}, expected -1 or +1")]
    InvalidSpin(i64),

    #[error("invalid column key: {0}")]
    InvalidColumnKey(String),

    #[error("gram matrix is singular even with ridge {ridge:e}")]
    SingularGram { ridge: f64 },

    #[error("deadline passed during the weight solve")]
    DeadlineExceeded,

    #[error("{what} needs at most {max} variables, instance has {got}")]
    TooLarge {
        what: &'static str,
        max: usize,
        got: usize,
    },

    #[error("invalid annealing schedule: {0}")]
    InvalidSchedule(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
