//! Crate-wide error type.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// A side length is odd, not a power of two, or otherwise unusable.
    InvalidDimension(String),
    /// Two inputs that must agree in shape do not.
    DimensionMismatch(String),
    /// A 2x2 block that must be constant is not (origami seed precondition).
    BlockConstancy { row: usize, col: usize },
    /// A numeric or enum argument is out of its allowed range.
    InvalidArgument(String),
    /// DGI reference average is (numerically) zero; series unsuitable for DGI.
    DegenerateReference,
    /// A correspondence-imaging selection rule matched no measurements.
    EmptySelection,
    /// A reconstruction was asked to run on an empty series.
    EmptySeries,
    /// Pearson correlation is undefined for a constant image.
    ConstantImage,
    /// A file or stream does not parse as the expected format.
    Format(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDimension(msg) => write!(f, "invalid dimension: {msg}"),
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::BlockConstancy { row, col } => write!(
                f,
                "2x2 block at ({row}, {col}) is not constant; construction invariant violated"
            ),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DegenerateReference => write!(
                f,
                "degenerate reference: mean S_R is zero (DGI requires 0/1 complementary-positive mode)"
            ),
            Error::EmptySelection => write!(f, "selection rule produced an empty subset"),
            Error::EmptySeries => write!(f, "bucket series is empty"),
            Error::ConstantImage => write!(f, "correlation undefined for a constant image"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
