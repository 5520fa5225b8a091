//! Differential evolution and its use for tuning CART (DECART).

mod de;
mod decart;

pub use de::{de_optimize, DeConfig, DeOutcome, Dimension, GenerationBest, ParamKind, SearchBox};
pub use decart::{decart_tune, decode_hyperparams, TunedCart};

use crate::learners::LearnerError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TuningError {
    #[error("invalid configuration: {0}")]
    Config(alloc::string::String),
    #[error("insufficient data: {rows} rows, need at least {needed}")]
    InsufficientData { rows: usize, needed: usize },
    #[error(transparent)]
    Learner(#[from] LearnerError),
}
