//! AMR evaluation suite and parse-accuracy prediction.
//!
//! This crate holds everything that is pure computation: the AMR graph
//! model and PENMAN codec, the 12-task / 36-metric evaluation suite, input
//! preprocessing, the hierarchical multi-output regressor with its training
//! loop, the ranking and correlation studies, and a synthetic corpus
//! generator. It is `no_std` and only needs `alloc`; file formats, IO and
//! the command line live in the `amrqe` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod amr;
pub mod apps;
pub mod datagen;
mod error;
pub mod math;
pub mod metrics;
pub mod model;
pub mod preprocess;

pub use error::{Error, Result};
