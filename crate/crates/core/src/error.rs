use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter fell outside its admissible range.
    #[error("`{name}` = {value} is out of range: {bound}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        bound: &'static str,
    },

    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("config is missing required key `{0}`")]
    MissingKey(&'static str),

    #[error("config line {line}: key `{key}` given more than once")]
    DuplicateKey { line: usize, key: String },

    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("time {0} s is not on the recording grid")]
    TimeNotOnGrid(f64),

    #[error("inconsistent time grid: {0}")]
    Grid(String),

    #[error("heading is not a unit vector (|h| = {0})")]
    NonUnitHeading(f64),

    #[error("no closed-form MSD for {0}")]
    NoClosedForm(String),

    #[error("{context} {path}: {source}")]
    Io {
        context: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl Error {
    /// True for errors caused by the user's configuration rather than the run itself.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::OutOfRange { .. }
                | Error::UnknownKey { .. }
                | Error::MissingKey(_)
                | Error::DuplicateKey { .. }
                | Error::Syntax { .. }
                | Error::InvalidValue { .. }
                | Error::TimeNotOnGrid(_)
                | Error::Grid(_)
                | Error::NoClosedForm(_)
        )
    }
}
