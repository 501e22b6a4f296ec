use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid must be at least 3x3, got {rows}x{cols}")]
    InvalidShape { rows: usize, cols: usize },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("buffer length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("intensity {value} at index {index} is outside [0, 1]")]
    IntensityOutOfRange { index: usize, value: f64 },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mask is degenerate: {0} region is empty")]
    DegenerateRegion(&'static str),

    #[error("candidate ({row}, {col}) is inconsistent with the current mask")]
    InconsistentCandidate { row: usize, col: usize },

    #[error(
        "topology changed at iteration {iteration}: foreground {fg_before} -> {fg_after}, \
         background {bg_before} -> {bg_after}"
    )]
    TopologyViolation {
        iteration: usize,
        fg_before: usize,
        fg_after: usize,
        bg_before: usize,
        bg_after: usize,
    },

    #[error("energy increased at iteration {iteration}: {previous} -> {current}")]
    EnergyIncrease {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {message}")]
    UnsupportedImage { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
