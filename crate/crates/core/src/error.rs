use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {x} outside the domain [0, 1]")]
    Domain { x: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid generator construction: {0}")]
    Construction(String),

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("cap exhausted: {0}")]
    CapExhausted(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot parse word `{0}`")]
    WordSyntax(String),
}
