use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix has odd dimension {0}")]
    OddDimension(usize),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not antisymmetric (residual {0:.3e})")]
    NotAntisymmetric(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not special orthogonal")]
    NotSpecialOrthogonal,
    #[error("matrix is not orthogonal")]
    NotOrthogonal,
    #[error("bad Majorana indices: {0}")]
    BadIndices(String),
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("value {value} outside of [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("{modes} modes exceed the supported maximum of {max}")]
    TooLarge { modes: usize, max: usize },
    #[error("state or operator does not respect parity")]
    NotFermionic,
    #[error("operator is not even")]
    NotEven,
    #[error("expected {expected} modes, found {found}")]
    WrongModeCount { expected: usize, found: usize },
    #[error("covariance matrix is not physical (largest singular value {0:.6})")]
    NotPhysical(f64),
    #[error("party {0} holds more than one mode")]
    MoreThanOneModePerParty(usize),
    #[error("covariance matrix is not pure")]
    NotPure,
    #[error("covariance matrix is not in standard form: {0}")]
    NotStandardForm(String),
    #[error("all seed parameters are zero")]
    AllZero,
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("instrument is not complete (residual {0:.3e})")]
    IncompleteInstrument(f64),
    #[error("diagonal operator is singular")]
    SingularDiagonal,
    #[error("symmetry list is empty")]
    EmptySymmetryList,
    #[error("matrix is not positive definite")]
    NotPositive,
    #[error("D*Gamma + I is numerically singular")]
    SingularPencil,
    #[error("bad partition: {0}")]
    BadPartition(String),
    #[error("channel is not a product of local channels")]
    NotSeparableChannel,
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
