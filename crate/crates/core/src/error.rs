use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("answer option {0} out of range 1..=5")]
    InvalidOption(u32),

    #[error("message has no inferential content (all codes neutral)")]
    NoInferentialContent,

    #[error("likelihood component {index} is non-positive ({value})")]
    NonPositiveLikelihood { index: usize, value: f64 },

    #[error("information weight {name} is invalid ({value}); weights must be finite and >= 0")]
    InvalidWeight { name: &'static str, value: f64 },

    #[error("alpha_d must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("topology is disconnected")]
    Disconnected,

    #[error("team {team}: {reason}")]
    InvalidRecord { team: String, reason: String },

    #[error("message from player {sender} is outside agent {owner}'s Markov blanket")]
    OutsideMarkovBlanket { sender: usize, owner: usize },

    #[error("player {node} is not a neighbor of player {owner}")]
    NotANeighbor { owner: usize, node: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("models not nested or fit failed: alt loglik {alt} < null loglik {null}")]
    NotNested { null: f64, alt: f64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("schema error in {file}: {reason}")]
    Schema { file: String, reason: String },

    #[error("csv error in {file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
