use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("{0}")]
    Data(String),

    #[error("row {row}, column {column:?}: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("no profile matches age tag {age:?}, gender tag {gender:?}, condition tag {condition:?}")]
    NoProfile {
        age: String,
        gender: String,
        condition: String,
    },

    #[error("no normal range for feature {feature:?} under profile {profile:?}")]
    MissingRange { feature: String, profile: String },

    #[error("{metric} is undefined: zero denominator")]
    UndefinedMetric { metric: &'static str },

    #[error("svm: {0}")]
    Svm(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("stage {stage:?} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, looking through stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// Errors caused by the caller's inputs (files, data, configuration),
    /// as opposed to solver breakdowns.
    pub fn is_data_error(&self) -> bool {
        !matches!(self.root(), Error::Svm(_))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            line,
            message: e.to_string(),
        }
    }
}
