use thiserror::Error;

/// Errors reported by the evaluation and design routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("constellation size {0} is not a power of two (>= 2)")]
    SizeNotPowerOfTwo(usize),
    #[error("{points} points but {labels} labels")]
    LengthMismatch { points: usize, labels: usize },
    #[error("label {0} appears more than once or is out of range")]
    DuplicateLabel(u32),
    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
    #[error("point {0} is not finite")]
    NonFinitePoint(usize),
    #[error("all points are zero; average power cannot be normalized")]
    AllZero,
    #[error("constellation average power is {0}, expected 1")]
    NotNormalized(f64),
    #[error("label widths differ ({0} vs {1})")]
    WidthMismatch(u32, u32),
    #[error("label value {value} does not fit in {width} bits")]
    LabelOutOfRange { value: u32, width: u32 },
    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid channel parameter: {0}")]
    InvalidChannel(&'static str),
    #[error("quadrature degree {0} outside 1..=30")]
    DegreeOutOfRange(usize),
    #[error("phase grid size {0} must be even and at least 64")]
    GridTooSmall(usize),
    #[error("unsupported reference constellation: {0}")]
    Unsupported(&'static str),
    #[error("invalid annealing configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("at least {min} samples required, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("abscissa list must be strictly increasing")]
    NotSorted,
    #[error("target rate {0} bits is not reached within the SNR search range")]
    TargetUnreachable(f64),
}

pub type Result<T> = core::result::Result<T, Error>;
