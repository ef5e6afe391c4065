use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size error: {what} = {requested} exceeds supported limit {limit}")]
    Size {
        what: &'static str,
        requested: u64,
        limit: u64,
    },

    #[error("index {n} is outside the table (limit {limit})")]
    OutOfTable { n: u64, limit: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("value {y} lies outside the bracket image [{lo}, {hi}]")]
    Bracket { y: f64, lo: f64, hi: f64 },

    #[error("h is not monotone on [{lo}, {hi}]")]
    NotMonotone { lo: f64, hi: f64 },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("tau cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
