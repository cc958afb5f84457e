use thiserror::Error;

/// Errors surfaced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid scenario, profile, or parameter values. Detected before any simulation starts.
    #[error("configuration error: {0}")]
    Config(String),

    /// A single simulation run failed.
    #[error("run failed for config '{label}' ({variant}) drop {drop}: {message}")]
    Run {
        label: String,
        variant: String,
        drop: u32,
        message: String,
    },

    /// An internal accounting invariant was violated.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("cannot aggregate an empty list of records")]
    EmptyAggregate,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by user-supplied configuration.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
