use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate state: squared norm must be positive and finite")]
    DegenerateState,

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("direction is not a unit vector (norm {norm})")]
    NonUnitDirection { norm: f64 },

    #[error("basis is not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("resolution is invalid: {0}")]
    InvalidResolution(String),

    #[error("insufficient dimension: {n} microstates requested in a space of dimension {dim}")]
    InsufficientDimension { n: usize, dim: usize },

    #[error(
        "projector rank too small for requested n: cell {cell} has rank {rank}, needs {needed}"
    )]
    RankTooSmall {
        cell: usize,
        rank: usize,
        needed: usize,
    },

    #[error("expansion size {n} is smaller than the number of cells {cells}")]
    TooFewMicrostates { n: usize, cells: usize },

    #[error("invalid expansion: {0}")]
    InvalidExpansion(String),

    #[error("vectors are not orthogonal (normalized overlap {overlap:e})")]
    NotOrthogonal { overlap: f64 },

    #[error("unitary does not fix target (residual {residual:e})")]
    UnitaryDoesNotFixTarget { residual: f64 },

    #[error("index {index} out of range for {len} microstates")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("undefined conditional: conditioning outcome has probability {probability:e}")]
    UndefinedConditional { probability: f64 },

    #[error("not deterministic: response value {value} is neither 0 nor 1")]
    NotDeterministic { value: f64 },

    #[error("empty grid")]
    EmptyGrid,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
