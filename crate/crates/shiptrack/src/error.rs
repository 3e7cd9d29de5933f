use std::path::PathBuf;

use shiptrack_core::raster::RasterError;
use shiptrack_core::synth::SynthError;
use shiptrack_core::trajectory::TrajectoryError;

/// Failures while reading or writing the on-disk formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("{path}: missing metadata field `{field}`")]
    MissingMetadata { path: PathBuf, field: &'static str },
    #[error("{path}: shape {found:?} does not match raster {expected:?}")]
    ShapeMismatch {
        path: PathBuf,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{path}: frame at {found} does not follow {previous}")]
    OutOfOrder {
        path: PathBuf,
        previous: String,
        found: String,
    },
    #[error("{path}: no valid records")]
    NoRecords { path: PathBuf },
    #[error("{0}")]
    Raster(#[from] RasterError),
    #[error("{0}")]
    Trajectory(#[from] TrajectoryError),
    #[error("{0}")]
    Synth(#[from] SynthError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}

pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.into(),
        reason: reason.into(),
    }
}
