use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid frame dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("pixel buffer holds {len} values but {width}x{height} frame needs {}", width * height)]
    BufferSize { width: usize, height: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("streak footprint x:[{x0}, {x1}] y:[{y0}, {y1}] is clipped by the {width}x{height} frame")]
    StreakClipped {
        x0: i64,
        x1: i64,
        y0: i64,
        y1: i64,
        width: usize,
        height: usize,
    },

    #[error("25x25 template centred at ({x}, {y}) does not fit inside {width}x{height} frame")]
    TemplateOutOfBounds { x: usize, y: usize, width: usize, height: usize },

    #[error("frame {width}x{height} is smaller than {min}x{min}")]
    FrameTooSmall { width: usize, height: usize, min: usize },

    #[error("mask is empty")]
    EmptyMask,

    #[error("background sigma is zero")]
    ZeroSigma,

    #[error("bisection did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("training rows contain only one class")]
    SingleClass,

    #[error("non-finite feature value in row {0}")]
    NonFinite(usize),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("degenerate component: {0}")]
    DegenerateComponent(String),

    #[error("no candidate direction yields at least 3 axis pixels")]
    NoAxis,

    #[error("layer extent leaves the frame")]
    ExtentOutOfFrame,

    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),

    #[error("unsupported bit depth (maxval {0})")]
    UnsupportedBitDepth(u32),

    #[error("truncated PGM payload: expected {expected} samples, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("bad model file: {0}")]
    BadModel(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File { path: path.into(), source }
    }
}
