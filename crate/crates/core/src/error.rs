use thiserror::Error;

use crate::grid::SubdomainId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("node ({i}, {j}, {k}) is outside a grid with {cells} cells per axis")]
    NodeOutOfRange {
        i: usize,
        j: usize,
        k: usize,
        cells: usize,
    },

    #[error("subdomains {0} and {1} do not share an interface")]
    NotAdjacent(SubdomainId, SubdomainId),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid boundary condition: {0}")]
    InvalidBoundary(String),

    #[error("boundary conditions are not symmetric: {0}")]
    NotSymmetric(String),

    #[error("unknown example {0} (expected 1..=4)")]
    UnknownExample(u8),

    #[error("example {example} is defined in {expected}D, got a {got}D grid")]
    DimensionMismatch {
        example: u8,
        expected: usize,
        got: usize,
    },

    #[error("condition map does not match the assembled operator: {0}")]
    ConditionMismatch(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetricMatrix { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("solver backend failure: {0}")]
    Backend(String),

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
