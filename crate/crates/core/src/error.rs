use std::path::PathBuf;

use crate::jpeg::JpegError;

/// Errors raised by the toolkit.
///
/// Every variant maps to a stable short code (see [`Error::code`]) that the
/// command-line driver prints as `ERR:<code>:`.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Unwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("non-finite value in plane at index {0}")]
    NonFinite(usize),

    #[error("unsupported channel count {0}")]
    UnsupportedChannels(usize),

    #[error("requested {requested:?} exceeds plane {actual:?}")]
    CropTooLarge {
        requested: (usize, usize),
        actual: (usize, usize),
    },

    #[error("degenerate target size {0:?}")]
    DegenerateSize((usize, usize)),

    #[error("manifest line {line}: duplicate path {path}")]
    DuplicatePath { line: usize, path: String },

    #[error("manifest line {line}: unknown {field} '{value}'")]
    Vocabulary {
        line: usize,
        field: &'static str,
        value: String,
    },

    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("plane {actual:?} too small, need at least {min}x{min}")]
    PlaneTooSmall { actual: (usize, usize), min: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("accumulator is empty")]
    EmptyAccumulator,

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("mask covers {coverage:.3} of the frame, leaving insufficient support")]
    InsufficientSupport { coverage: f64 },

    #[error("need at least two fingerprints, got {0}")]
    TooFewFingerprints(usize),

    #[error("region {0} out of bounds")]
    RegionOutOfBounds(usize),

    #[error("regions {0} and {1} overlap")]
    OverlappingRegions(usize, usize),

    #[error("score set needs both genuine and impostor entries")]
    SingleClass,

    #[error(transparent)]
    Jpeg(#[from] JpegError),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Unreadable { .. } => "unreadable",
            Error::Unwritable { .. } => "unwritable",
            Error::MalformedHeader(_) => "malformed-header",
            Error::Truncated { .. } => "truncated",
            Error::UnsupportedFormat(_) => "unsupported-format",
            Error::InvalidImage(_) => "invalid-image",
            Error::NonFinite(_) => "non-finite",
            Error::UnsupportedChannels(_) => "unsupported-channels",
            Error::CropTooLarge { .. } => "crop-too-large",
            Error::DegenerateSize(_) => "degenerate-size",
            Error::DuplicatePath { .. } => "duplicate-path",
            Error::Vocabulary { .. } => "vocabulary",
            Error::Syntax { .. } => "syntax",
            Error::PlaneTooSmall { .. } => "plane-too-small",
            Error::InvalidConfig(_) => "invalid-config",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::EmptyAccumulator => "empty-accumulator",
            Error::DegenerateInput(_) => "degenerate-input",
            Error::InsufficientSupport { .. } => "insufficient-support",
            Error::TooFewFingerprints(_) => "too-few-fingerprints",
            Error::RegionOutOfBounds(_) => "region-out-of-bounds",
            Error::OverlappingRegions(..) => "overlapping-regions",
            Error::SingleClass => "single-class",
            Error::Jpeg(e) => e.code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
