use thiserror::Error;

/// Errors surfaced by model construction and norm evaluation.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("degenerate subset: measure is zero")]
    DegenerateSubset,

    #[error("insufficient resolution: need {needed} disjoint subsets, space provides {available}")]
    InsufficientResolution { needed: usize, available: usize },

    #[error("insufficient copies: need {needed}, space provides {available}")]
    InsufficientCopies { needed: usize, available: usize },

    #[error("diamond overflow: increase copies/resolution (pairing needs index {needed}, target dimension {dim})")]
    DiamondOverflow { needed: usize, dim: usize },

    #[error("overlapping subsets: coordinate {index} appears twice")]
    OverlappingSubsets { index: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unsupported norm evaluation: {0}")]
    UnsupportedKind(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
