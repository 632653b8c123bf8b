//! Corpus ingestion, artifact formats, the score/sample/analyze pipeline and
//! the command line, on top of `abnormal-core`.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod formats;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use error::{AppError, Result};
