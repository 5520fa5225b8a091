//! Bagged CART ensemble.

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::tree::{fit_rows, CartHyperParams, RegressionTree};
use super::LearnerError;
use crate::data::SupervisedTable;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ForestParams {
    pub trees: usize,
    pub bootstrap: bool,
    /// Fraction of features per split; `None` means `sqrt(p) / p`.
    pub max_feature: Option<f64>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            bootstrap: true,
            max_feature: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
}

impl RandomForest {
    pub fn fit(
        train: &SupervisedTable,
        params: &ForestParams,
        seed: u64,
    ) -> Result<RandomForest, LearnerError> {
        if train.is_empty() {
            return Err(LearnerError::EmptyTrain);
        }
        let n = train.len();
        let p = train.feature_count().max(1);
        let hp = CartHyperParams {
            max_feature: params
                .max_feature
                .unwrap_or_else(|| libm::sqrt(p as f64) / p as f64),
            ..CartHyperParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trees = Vec::with_capacity(params.trees);
        for _ in 0..params.trees.max(1) {
            let tree_seed = rng.next_u64();
            let rows = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            trees.push(fit_rows(train.features(), train.targets(), rows, &hp, tree_seed)?);
        }
        Ok(RandomForest { trees })
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn predict(&self, features: &[f64]) -> Result<f64, LearnerError> {
        let mut total = 0.0;
        for t in &self.trees {
            total += t.predict(features)?;
        }
        Ok(total / self.trees.len() as f64)
    }
}
