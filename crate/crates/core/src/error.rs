use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ground-set size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("partition {fine} is not a refinement of {coarse}")]
    NotRefinement { fine: String, coarse: String },

    #[error("block index {index} out of range for a partition with {blocks} blocks")]
    BlockIndexOutOfRange { index: usize, blocks: usize },

    #[error("block index {0} appears in more than one merge group")]
    OverlappingGroups(usize),

    #[error("moment diverges: {0}")]
    Divergent(String),

    #[error("no asymptotic expansion for {0}")]
    UncoveredRegime(String),

    #[error("cannot parse partition from {0:?}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
