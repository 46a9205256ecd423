use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed graymap stream.
    #[error("pgm decode error at byte {offset}: {message}")]
    Decode { offset: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Histogram with fewer than two occupied bins.
    #[error("histogram has no threshold (fewer than two occupied bins)")]
    NoThreshold,

    /// Pixel length outside the span of the calibration table.
    #[error("pixel length {l_pmax:.3} outside calibration span, nearest bound {nearest:.3} m")]
    HeightOutOfRange { l_pmax: f64, nearest: f64 },

    #[error("calibration failed at height {height} m: {message}")]
    Calibration { height: f64, message: String },

    /// `line` is 1-based; 0 means the problem is not tied to a line.
    #[error("config error on line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn arg(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
