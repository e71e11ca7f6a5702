use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("infeasible dispatch: load {load_mw:.3} MW outside generation range [{min_mw:.3}, {max_mw:.3}] MW")]
    InfeasibleDispatch {
        load_mw: f64,
        min_mw: f64,
        max_mw: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular susceptance system in island with slack bus {slack_bus}")]
    SingularSystem { slack_bus: i64 },

    #[error("branch pair ({0}, {1}) is already a blackout set; no minimal superset exists")]
    NotMinimalizable(i64, i64),

    #[error("covariance matrix is not repairable: clipping moved a correlation by {0:e}")]
    NotRepairable(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("most frequent pair is unstable: last changed at trial {last_change}, window starts at {window_start}")]
    Unstable { last_change: u64, window_start: u64 },

    #[error("no set-size policy supplied for k = {0}")]
    MissingSetSize(usize),

    #[error("ledger is empty")]
    EmptyLedger,

    #[error("{path}: {source}")]
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
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::Validation(_) | Error::Domain(_) | Error::MissingSetSize(_)
        )
    }
}
