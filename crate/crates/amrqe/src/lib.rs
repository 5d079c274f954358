//! File formats, IO and the `amrqe` command line on top of `amrqe-core`.

pub mod cli;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod modelfile;
pub mod tables;

pub use error::{AppError, Result};
