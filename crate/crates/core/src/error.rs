use thiserror::Error;

/// Errors produced by game construction, file parsing and the
/// long-running numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("non-finite entry in {context}")]
    NonFinite { context: &'static str },

    #[error("{context}: index {index} out of range for player {player} (limit {limit})")]
    IndexOutOfRange {
        context: &'static str,
        player: usize,
        index: usize,
        limit: usize,
    },

    #[error("duplicate focal player {player}")]
    DuplicateFocalPlayer { player: usize },

    #[error("profile space has {size} entries, exceeding the budget of {budget}")]
    BudgetExceeded { size: usize, budget: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("region with delta {delta} is empty for strategy counts {counts:?}")]
    EmptyRegion { delta: f64, counts: Vec<usize> },

    #[error("game is not a potential game for the supplied potential (max deviation {deviation})")]
    NotPotential { deviation: f64 },

    #[error("trajectory state became non-finite; last finite step was {last_finite_step}")]
    NonFiniteState { last_finite_step: usize },

    #[error("point is not interior: coordinate {index} of player {player} is {value}")]
    NotInterior {
        player: usize,
        index: usize,
        value: f64,
    },

    #[error("malformed game file: {0}")]
    BadGameFile(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
