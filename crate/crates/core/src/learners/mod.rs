//! Regression learners: CART plus the KNN, linear and random forest baselines.

mod forest;
mod knn;
mod linear;
mod tree;

use core::fmt;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

pub use forest::{ForestParams, RandomForest};
pub use knn::{knn_predict, DEFAULT_K};
pub use linear::LinearModel;
pub use tree::{cart_fit, CartHyperParams, Node, RegressionTree};

use crate::data::SupervisedTable;
use crate::tuning::DeConfig;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LearnerError {
    #[error("training table is empty")]
    EmptyTrain,
    #[error("expected {expected} features, got {found}")]
    Shape { expected: usize, found: usize },
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
    #[error("{0} is not a baseline learner")]
    NotABaseline(LearnerKind),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum LearnerKind {
    Knn,
    Lnr,
    Rft,
    Cart,
    Decart,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 5] = [
        LearnerKind::Knn,
        LearnerKind::Lnr,
        LearnerKind::Rft,
        LearnerKind::Cart,
        LearnerKind::Decart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Knn => "KNN",
            LearnerKind::Lnr => "LNR",
            LearnerKind::Rft => "RFT",
            LearnerKind::Cart => "CART",
            LearnerKind::Decart => "DECART",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| alloc::format!("unknown learner {s:?}"))
    }
}

/// A learner together with its settings.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum LearnerSpec {
    Knn { k: usize },
    Lnr,
    Rft(ForestParams),
    Cart(CartHyperParams),
    Decart(DeConfig),
}

impl LearnerSpec {
    /// Reference defaults for each learner.
    pub fn default_for(kind: LearnerKind) -> LearnerSpec {
        match kind {
            LearnerKind::Knn => LearnerSpec::Knn { k: DEFAULT_K },
            LearnerKind::Lnr => LearnerSpec::Lnr,
            LearnerKind::Rft => LearnerSpec::Rft(ForestParams::default()),
            LearnerKind::Cart => LearnerSpec::Cart(CartHyperParams::default()),
            LearnerKind::Decart => LearnerSpec::Decart(DeConfig::default()),
        }
    }

    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerSpec::Knn { .. } => LearnerKind::Knn,
            LearnerSpec::Lnr => LearnerKind::Lnr,
            LearnerSpec::Rft(_) => LearnerKind::Rft,
            LearnerSpec::Cart(_) => LearnerKind::Cart,
            LearnerSpec::Decart(_) => LearnerKind::Decart,
        }
    }
}

/// Fits one of the untuned learners and predicts a single point.
pub fn baseline_fit_predict(
    spec: &LearnerSpec,
    train: &SupervisedTable,
    test_features: &[f64],
    seed: u64,
) -> Result<f64, LearnerError> {
    if train.is_empty() {
        return Err(LearnerError::EmptyTrain);
    }
    match spec {
        LearnerSpec::Knn { k } => knn_predict(train, test_features, *k),
        LearnerSpec::Lnr => LinearModel::fit(train)?.predict(test_features),
        LearnerSpec::Rft(params) => RandomForest::fit(train, params, seed)?.predict(test_features),
        LearnerSpec::Cart(hp) => cart_fit(train, hp, seed)?.predict(test_features),
        LearnerSpec::Decart(_) => Err(LearnerError::NotABaseline(LearnerKind::Decart)),
    }
}
