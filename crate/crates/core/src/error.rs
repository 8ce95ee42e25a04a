use std::path::PathBuf;

/// Errors raised across the workbench.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid ontology: {0}")]
    InvalidOntology(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("user agenda not initialized")]
    AgendaUninitialized,

    #[error("episode has no turns")]
    EmptySequence,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("training diverged at epoch {epoch}: validation rmse {rmse}")]
    Diverged { epoch: usize, rmse: f64 },

    #[error("user goal is not available to the system")]
    GoalUnavailable,

    #[error("no active episode")]
    NoActiveEpisode,

    #[error("value iteration did not converge within {0} sweeps")]
    NonConvergent(usize),

    #[error("balanced corpus unreachable: {successes} successes / {failures} failures after {attempts} attempts")]
    BalanceUnreachable {
        successes: usize,
        failures: usize,
        attempts: usize,
    },

    #[error("{0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("no runs found in {0}")]
    NoRuns(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
