use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// An invariant the protocol is supposed to guarantee was broken during a
    /// run (consensus loss, impossible transmit/receive overlap, ...).
    #[error("simulation fault at superframe {superframe}: {detail}")]
    Fault { superframe: u64, detail: String },

    #[error("allocation validation failed: {0}")]
    Validation(String),

    #[error("record decode: {0}")]
    RecordDecode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
