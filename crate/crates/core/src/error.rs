use thiserror::Error;

/// Errors produced by the codec library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length {len} is not a power of two")]
    NonPowerOfTwoLength { len: usize },

    #[error("input is empty")]
    EmptyInput,

    #[error("{width}x{height} grid is not divisible by 2^{levels}")]
    DimensionNotDivisible {
        width: usize,
        height: usize,
        levels: usize,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("embedding capacity T = {t} must be below the measurement count m = {m}")]
    CapacityNotBelowMeasurements { t: usize, m: usize },

    #[error("malformed key file: {0}")]
    MalformedKeyFile(String),

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("rectangle {x},{y},{width},{height} exceeds the {image_width}x{image_height} image")]
    RectOutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
        image_width: usize,
        image_height: usize,
    },

    #[error("region of {region} pixels exceeds the embedding capacity T = {capacity}")]
    CapacityExceeded { region: usize, capacity: usize },

    #[error("region is empty; no embedding amplitude is defined")]
    EmptyRegion,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("zone contains no pixels")]
    EmptyZone,

    #[error("malformed payload: {0}")]
    MalformedPayload(String),

    #[error("malformed image: {0}")]
    MalformedImage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
