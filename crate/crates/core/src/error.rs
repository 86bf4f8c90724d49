use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the macro model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported FP8 exponent width {0} (expected 2..=5)")]
    UnsupportedFormat(u32),

    #[error("non-finite FP8 encoding 0x{byte:02x} in {format}")]
    NonFinite { byte: u8, format: String },

    #[error("cannot encode NaN")]
    NanInput,

    #[error("non-finite source value at index {index}")]
    NonFiniteSource { index: usize },

    #[error("empty tensor")]
    EmptyTensor,

    #[error("empty group")]
    EmptyGroup,

    #[error("invalid group size {0}")]
    InvalidGroupSize(usize),

    #[error("shape {shape:?} does not match {len} elements")]
    ShapeMismatch { shape: Vec<usize>, len: usize },

    #[error("incompatible operands: {0}")]
    Incompatible(String),

    #[error("bitwidth {value} outside {what} range")]
    BitwidthOutOfRange { what: &'static str, value: i64 },

    #[error("value {value} does not fit in {width}-bit two's complement")]
    ValueOutOfRange { value: i64, width: u32 },

    #[error("scaling factor {0} is not a non-negative multiple of 0.25")]
    InvalidScale(String),

    #[error("all-zero reference signal")]
    ZeroSignal,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("inconsistent calibration: {0}")]
    Calibration(String),

    #[error("bad magic in {0}")]
    BadMagic(PathBuf),

    #[error("truncated file {path}: {detail}")]
    Truncated { path: PathBuf, detail: String },

    #[error("parse error at {location}: {detail}")]
    Parse { location: String, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
