use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameters for which the harmonic model is not defined.
    #[error("model invalid: {0}")]
    ModelInvalid(String),

    #[error("degenerate trap: {0}")]
    DegenerateTrap(String),

    /// `F_z(r0) = 0`: the coupling surface is flat and has no seam.
    #[error("no conical intersection: exchange gradient vanishes")]
    NoIntersection,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing configuration key `{0}`")]
    MissingKey(String),

    #[error("numerical blowup at step {step}: {what}")]
    Blowup { step: usize, what: String },

    #[error("operation not defined in {mode} mode: {what}")]
    Mode { mode: &'static str, what: String },

    /// The objective decreased by more than the allowed tolerance.
    #[error("monotonicity fault at iteration {iteration}: J fell from {previous} to {current}")]
    Monotonicity {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("non-finite objective at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::MissingKey(_) | Error::Parse { .. } => 2,
            Error::ModelInvalid(_) | Error::DegenerateTrap(_) | Error::NoIntersection => 2,
            Error::Blowup { .. } | Error::NonFiniteObjective { .. } => 3,
            Error::Monotonicity { .. } => 4,
            Error::Mode { .. } | Error::Io { .. } => 1,
        }
    }
}
