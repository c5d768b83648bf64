use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {value} outside [0, 1]")]
    Domain { value: String },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("condition violated: {0}")]
    Condition(String),

    #[error("incompatible system: {0}")]
    Incompatible(String),

    #[error("symbol {symbol} out of range for an alphabet of size {n}")]
    Symbol { symbol: usize, n: usize },

    #[error("depth cap exceeded: requested {requested}, cap {cap}")]
    DepthCap { requested: usize, cap: usize },

    #[error("exact arithmetic requested on a floating-point map")]
    NotExact,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
