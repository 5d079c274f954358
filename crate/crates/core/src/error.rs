use alloc::string::String;

use crate::amr::ParseError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("exhaustive search refused: {0}")]
    TooLarge(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(&'static str),
    #[error("dependency format error: {0}")]
    DepFormat(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {block}")]
    NonFinite { block: String },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
}
