use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("series has gaps; missing weeks: {}", join_stamps(.missing))]
    Gap { missing: Vec<String> },

    #[error("row {row}: TOTAL_PATIENTS is zero, cannot compute a rate")]
    ZeroDenominator { row: usize },

    #[error("series too short: need at least {required} points, got {actual}")]
    TooShort { required: usize, actual: usize },

    #[error("degenerate series: {0}")]
    Degenerate(String),

    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("design matrix is rank deficient (rank {rank} < {cols} columns)")]
    Rank { rank: usize, cols: usize },

    #[error("non-finite value at stage `{stage}`")]
    NonFinite { stage: String },

    #[error("function evaluation was not finite at coordinate {coordinate}")]
    Evaluation { coordinate: usize },

    #[error("training diverged at epoch {epoch}, step {step} (loss = {loss})")]
    Diverged { epoch: usize, step: usize, loss: f64 },

    #[error("unknown stamp {stamp}; valid range is {first} to {last}")]
    Lookup {
        stamp: String,
        first: String,
        last: String,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::Evaluation { .. }
                | Error::Diverged { .. }
                | Error::Rank { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn join_stamps(stamps: &[String]) -> String {
    stamps.join(", ")
}
