use std::path::PathBuf;

use crate::topology::RoutingTable;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("invalid fuzzy configuration: {0}")]
    FuzzyConfig(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The discovery loop ran out of rounds with nodes still on the frontier.
    #[error("setup incomplete after {rounds} rounds ({frontier} nodes still undiscovered)")]
    SetupIncomplete {
        rounds: usize,
        frontier: usize,
        partial: Box<RoutingTable>,
    },

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
