use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidSpec(String),

    #[error("no connected {model} graph after {attempts} attempts")]
    ConnectivityFailure { model: &'static str, attempts: usize },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("spatial arrivals need an embedded graph")]
    InvalidArrival,

    #[error("allocation trace is empty")]
    EmptyTrace,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid rates: lambda={lambda}, mu={mu}")]
    InvalidRate { lambda: f64, mu: f64 },

    #[error("estimator has no measured time")]
    NoMeasurement,

    #[error("no job departed during the measured window")]
    NoDepartures,

    #[error("no job records in the measured window")]
    EmptyRecords,

    #[error("pair ({0}, {1}) is not tracked")]
    UntrackedPair(usize, usize),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
