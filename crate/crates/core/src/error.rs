use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("ambiguous relation: {0}")]
    Ambiguous(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular evaluation at theta = {0}")]
    Singular(f64),
    #[error("flat point at theta = {0}")]
    FlatPoint(f64),
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("undefined slope: {0}")]
    UndefinedSlope(String),
    #[error("umbilic off the axis near theta = {0}: slope unbounded")]
    UnboundedSlope(f64),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("inadmissible: {0}")]
    Inadmissible(String),
    #[error("empty admissible domain")]
    EmptyDomain,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Syntax { .. } | Error::Ambiguous(_) | Error::Invalid(_) => 1,
            Error::Inadmissible(_) | Error::EmptyDomain => 3,
            _ => 2,
        }
    }
}
