use crate::lattice::{Cell, Primitive};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid primitive: {0}")]
    InvalidPrimitive(String),

    #[error("no structure to attach to")]
    NoStructure,

    #[error("assembly saturated: no feasible placement remains")]
    Saturated,

    #[error("empty combination")]
    EmptyCombination,

    #[error("brick {index} ({brick}) overlaps an earlier brick")]
    Overlap { index: usize, brick: Primitive },

    #[error("brick {index} ({brick}) does not connect to any earlier brick")]
    Disconnected { index: usize, brick: Primitive },

    #[error("cell {cell:?} lies outside the extents {extents:?}")]
    OutOfExtents { cell: Cell, extents: [i32; 3] },

    #[error("invalid target shape: {0}")]
    InvalidTarget(String),

    #[error("covariance matrix is not positive definite even with jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("invalid gaussian process input: {0}")]
    InvalidGpInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{shape} is not tileable with 2x4 bricks: {reason}; try {suggestion}")]
    Untileable {
        shape: &'static str,
        reason: String,
        suggestion: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
