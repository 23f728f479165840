use std::path::PathBuf;

use thiserror::Error;

use crate::decay::DecayModel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("late field has zero energy; DRR is undefined for an anechoic response")]
    Anechoic,
    #[error("signal is silent")]
    Silence,
    #[error("sample rate mismatch: expected {expected} Hz, got {actual} Hz")]
    RateMismatch { expected: u32, actual: u32 },
    #[error("no real gain reaches the requested DRR (discriminant {discriminant:e})")]
    NoRealRoot { discriminant: f64 },
    #[error("decay fit did not converge after {iterations} iterations")]
    FitFailure {
        best: Box<DecayModel>,
        rms_error_db: f64,
        iterations: usize,
    },
    #[error("no decaying segment found (fitted tau {tau:.4} s)")]
    NoDecay { tau: f64 },
    #[error("band {band}: {source}")]
    Band {
        band: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("filterbank power sum ripple {ripple_db:.3} dB exceeds 1 dB")]
    FilterbankRipple { ripple_db: f64 },
    #[error("insufficient source material: {0}")]
    Shortfall(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical machinery as opposed to bad input data.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NoRealRoot { .. }
            | Error::FitFailure { .. }
            | Error::NoDecay { .. }
            | Error::FilterbankRipple { .. } => true,
            Error::Band { source, .. } => source.is_numeric(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
