//! Mining, datasets, experiment harness and command line for forecasting
//! per-project health indicators with tuned regression trees.

pub mod cli;
pub mod csvio;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod report;
pub mod synth;

pub use error::Error;
