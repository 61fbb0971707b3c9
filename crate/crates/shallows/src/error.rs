//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Wavelength outside the tabulated range of a lookup curve.
    #[error("wavelength {lambda} nm outside range [{min}, {max}] nm of curve '{curve}'")]
    CurveRange {
        curve: String,
        lambda: f64,
        min: f64,
        max: f64,
    },

    /// A bottom spectrum cannot be normalised at 550 nm.
    #[error("curve '{curve}': value {value} at 550 nm, cannot normalise")]
    Normalization { curve: String, value: f64 },

    /// A domain type invariant was violated at construction.
    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },

    /// An operation was called outside its mathematical domain.
    #[error("domain error in {op}: {why}")]
    Domain { op: &'static str, why: String },

    /// A spectrum is unusable for the requested metric (zero norm, zero sum).
    #[error("degenerate spectrum in {op}: {why}")]
    DegenerateSpectrum { op: &'static str, why: String },

    /// The caller asked for something inconsistent (dimension mismatches,
    /// empty inputs, unknown configuration keys).
    #[error("usage error: {0}")]
    Usage(String),

    /// The objective was not finite at the optimizer starting point.
    #[error("optimizer start: objective is not finite at the initial point")]
    NonFiniteStart,

    /// A fitting stage could not produce a result.
    #[error("fit failed: {0}")]
    Fit(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {why}")]
    Parse {
        path: PathBuf,
        line: usize,
        why: String,
    },

    #[error("{path}: expected {expected} bytes of raster data, found {actual}")]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
}

impl Error {
    /// Process exit code for the CLI: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Io { .. } | Error::Parse { .. } | Error::SizeMismatch { .. } => 2,
            Error::Invalid { .. } => 2,
            Error::CurveRange { .. }
            | Error::Normalization { .. }
            | Error::Domain { .. }
            | Error::DegenerateSpectrum { .. }
            | Error::NonFiniteStart
            | Error::Fit(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
