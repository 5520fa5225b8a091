//! DECART: differential evolution over the CART hyperparameter box, scored
//! on a one-month validation holdout.

use alloc::vec::Vec;

use super::de::{de_optimize, DeConfig, GenerationBest, SearchBox};
use super::TuningError;
use crate::data::SupervisedTable;
use crate::learners::{cart_fit, CartHyperParams, RegressionTree};

/// Minimum rows: two to train on plus the validation month.
pub const MIN_TUNING_ROWS: usize = 3;

fn round_half_up(v: f64) -> f64 {
    libm::floor(v + 0.5)
}

/// Maps a (clipped) DE vector onto CART hyperparameters.
pub fn decode_hyperparams(v: &[f64], bbox: &SearchBox) -> CartHyperParams {
    let mut v: Vec<f64> = v.to_vec();
    bbox.clip(&mut v);
    CartHyperParams {
        max_feature: v[0],
        max_depth: Some(round_half_up(v[1]) as u32),
        min_samples_leaf: round_half_up(v[2]) as usize,
        min_samples_split: round_half_up(v[3]) as usize,
    }
}

#[derive(Clone, Debug)]
pub struct TunedCart {
    pub params: CartHyperParams,
    /// Refit on the whole training table.
    pub tree: RegressionTree,
    /// Absolute validation error of the winning parameters.
    pub validation_error: f64,
    pub evaluations: usize,
    pub log: Vec<GenerationBest>,
}

/// Tunes CART on `train`, holding out its last row for validation.
pub fn decart_tune(
    train: &SupervisedTable,
    cfg: &DeConfig,
    seed: u64,
) -> Result<TunedCart, TuningError> {
    if train.len() < MIN_TUNING_ROWS {
        return Err(TuningError::InsufficientData {
            rows: train.len(),
            needed: MIN_TUNING_ROWS,
        });
    }
    let inner = train.head(train.len() - 1);
    let last = train.len() - 1;
    let val_x = &train.features()[last];
    let val_y = train.targets()[last];

    let bbox = SearchBox::cart();
    let mut failure = None;
    let outcome = de_optimize(
        |v| {
            let hp = decode_hyperparams(v, &bbox);
            match cart_fit(&inner, &hp, seed).and_then(|t| t.predict(val_x)) {
                Ok(p) => libm::fabs(p - val_y),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            }
        },
        &bbox,
        cfg,
        seed,
    )?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let params = decode_hyperparams(&outcome.best, &bbox);
    let tree = cart_fit(train, &params, seed)?;
    Ok(TunedCart {
        params,
        tree,
        validation_error: outcome.best_value,
        evaluations: outcome.evaluations,
        log: outcome.log,
    })
}
