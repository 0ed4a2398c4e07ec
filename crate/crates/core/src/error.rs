use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported dimension {0}")]
    Dimension(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("mode count {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("photon totals differ: {left} vs {right}")]
    TotalMismatch { left: usize, right: usize },

    #[error("outcome has {found} modes, expected {expected}")]
    ModeCountMismatch { expected: usize, found: usize },

    #[error("outcome is not collision-free")]
    CollisionOutcome,

    #[error("state space of {size} configurations exceeds the limit of {limit}")]
    StateSpaceTooLarge { size: u128, limit: u128 },

    #[error("matrix is not symmetric (max deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("odd matrix dimension {0}")]
    OddDimension(usize),

    #[error("gate count mismatch: expected {expected}, found {found}")]
    GateCountMismatch { expected: usize, found: usize },

    #[error(
        "extrapolation amplification 2^{amplification_bits:.1} needs about {required_bits} bits \
         of working precision, only {available_bits} available; use the extended-precision path"
    )]
    ConditioningOverflow {
        amplification_bits: f64,
        required_bits: u32,
        available_bits: u32,
    },

    #[error("size {degree} exceeds the supported limit {limit}")]
    DegreeTooLarge { degree: usize, limit: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
