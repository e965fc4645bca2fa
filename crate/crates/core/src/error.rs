use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {}: {source}", .path.display())]
    Unwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("size mismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("sample {value} at index {index} exceeds maximum code {max}")]
    SampleOutOfRange { index: usize, value: u32, max: u32 },

    #[error("{bit_depth}-bit frame cannot be stored as {format}")]
    DepthIncompatible { bit_depth: u8, format: &'static str },

    #[error("frame dimensions {frame_width}x{frame_height} do not match format {spec_width}x{spec_height}")]
    DimensionMismatch {
        frame_width: usize,
        frame_height: usize,
        spec_width: usize,
        spec_height: usize,
    },

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("invalid pattern spec: {0}")]
    InvalidSpec(String),

    #[error("invalid defect model: {0}")]
    InvalidModel(String),

    #[error("histogram is empty")]
    EmptyHistogram,

    #[error("degenerate histogram: only {nonzero} non-zero codes (need at least 3)")]
    DegenerateHistogram { nonzero: usize },

    #[error("frame {width}x{height} is smaller than one {block_size}x{block_size} block")]
    FrameSmallerThanBlock {
        width: usize,
        height: usize,
        block_size: usize,
    },

    #[error("frame is not bimodal: {0}")]
    NotBimodal(String),

    #[error(
        "inconsistent transition count: expected {expected} per line, offending lines {lines:?}"
    )]
    InconsistentTransitionCount {
        expected: usize,
        /// `(line, count)` for every line whose count differs.
        lines: Vec<(usize, usize)>,
    },

    #[error("line of {0} samples is too short for spectral analysis (need at least 4)")]
    LineTooShort(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("report (de)serialisation failed: {0}")]
    Serde(#[from] serde_json::Error),
}
