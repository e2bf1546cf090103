use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("duplicate observation for entity {entity}, year {year}, variable {variable}")]
    DuplicateObservation {
        entity: String,
        year: i32,
        variable: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("panel too small: {0}")]
    InsufficientData(String),

    #[error("design matrix is rank deficient at column {column} ({name})")]
    RankDeficient { column: usize, name: String },

    #[error("cross-section {entity}: {message}")]
    CrossSection { entity: String, message: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("series too short: {0}")]
    TooShort(String),

    #[error("no tabulated moments for {0}; enable Monte Carlo calibration")]
    OutsideTable(String),

    #[error("unbalanced estimation sample: {0}")]
    Unbalanced(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
