use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid frame dimension {name} = {value} (must be at least 2)")]
    InvalidDimension { name: &'static str, value: usize },

    #[error("buffer holds {found} samples but the frame needs {expected}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("frame mismatch between operands: {left} vs {right}")]
    FrameMismatch { left: String, right: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("path delay of {delay_samples} samples exceeds the frame of {frame_len} samples")]
    DelayOutOfRange { delay_samples: f64, frame_len: usize },

    #[error("path delay {delay_s:e} s is not an integer number of samples")]
    OffGridDelay { delay_s: f64 },

    #[error("path set must hold exactly one line-of-sight path, listed first with the smallest delay")]
    InvalidPathSet,

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("{snapshots} snapshots cannot resolve {sources} sources")]
    RankDeficient { snapshots: usize, sources: usize },

    #[error("no line-of-sight detection present")]
    NoLosDetection,

    #[error("matched-filter map is empty")]
    EmptyMap,

    #[error("smoothing window {window} is invalid for a track of {len} points")]
    InvalidWindow { window: usize, len: usize },

    #[error("track timestamps must be strictly increasing")]
    NonMonotonicTrack,

    #[error("no power split satisfies the rate requirements")]
    Infeasible,
}
