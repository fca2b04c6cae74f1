use std::path::PathBuf;

use thiserror::Error;

use crate::model::Direction;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("integration diverged at step {step} (t = {t})")]
    IntegrationDiverged { step: usize, t: f64 },

    #[error("{direction} trajectory {stream_id} diverged at step {step}")]
    TrajectoryDiverged {
        direction: Direction,
        stream_id: u64,
        step: usize,
    },

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("need at least {required} samples, got {got}")]
    InsufficientSamples { required: usize, got: usize },

    #[error("only {qualifying} bins qualify for the log-ratio (need {required})")]
    InsufficientOverlap { qualifying: usize, required: usize },

    #[error("histograms do not share bin edges")]
    BinningMismatch,

    #[error("config error at line {line} (`{key}`): {message}")]
    Config {
        key: String,
        line: usize,
        message: String,
    },

    #[error("schema mismatch in {}: {detail}", path.display())]
    Schema { path: PathBuf, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::IntegrationDiverged { .. } | Error::TrajectoryDiverged { .. } => 3,
            _ => 2,
        }
    }
}
