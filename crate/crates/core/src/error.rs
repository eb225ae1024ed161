use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} is outside the unit interval")]
    Domain { value: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),

    #[error("the empty coalition has no cost shares")]
    EmptyCoalition,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
