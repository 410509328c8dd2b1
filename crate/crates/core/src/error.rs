use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    #[error("{0} requires a nonempty sample list")]
    EmptySamples(&'static str),

    #[error("singular value decomposition failed")]
    SvdFailed,

    #[error("trial with seed {seed} failed: {source}")]
    Trial {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("sweep point {axis_value} / {scenario} (seed {seed}) failed: {source}")]
    Sweep {
        axis_value: f64,
        scenario: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
