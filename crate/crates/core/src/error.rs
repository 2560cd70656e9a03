use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    Header(String),

    #[error("only 3-D volumes supported (NDims = {0})")]
    UnsupportedDims(usize),

    #[error("unsupported element type {0}")]
    UnsupportedElementType(String),

    #[error("data size mismatch: expected {expected} bytes, found {actual}")]
    DataSizeMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "seed ({:.3}, {:.3}, {:.3}) mm lies outside the volume bounds \
         [{:.3}, {:.3}] x [{:.3}, {:.3}] x [{:.3}, {:.3}] mm",
        seed[0], seed[1], seed[2], min[0], max[0], min[1], max[1], min[2], max[2]
    )]
    SeedOutsideVolume {
        seed: [f64; 3],
        min: [f64; 3],
        max: [f64; 3],
    },

    #[error("grid dimensions differ: {a:?} vs {b:?}")]
    DimsMismatch { a: [usize; 3], b: [usize; 3] },

    #[error("dice coefficient is undefined for two empty masks")]
    BothMasksEmpty,

    #[error("arc {arc} has invalid capacity {capacity}")]
    InvalidCapacity { arc: usize, capacity: f64 },

    #[error("network too large for exhaustive enumeration ({0} inner nodes, limit 20)")]
    TooLargeForEnumeration(usize),

    #[error("source set is not a layer prefix on ray {0}")]
    NonPrefixCut(usize),

    #[error("labeling covers {got} nodes, network has {expected}")]
    IncompleteLabeling { expected: usize, got: usize },

    #[error("operation not supported for this template: {0}")]
    UnsupportedTemplate(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
