//! k-nearest-neighbour regression on raw (unscaled) features.

use alloc::vec::Vec;

use super::LearnerError;
use crate::data::SupervisedTable;

pub const DEFAULT_K: usize = 5;

/// Mean target of the `k` nearest rows by Euclidean distance.
///
/// `k` is capped at the row count; equal distances keep row order.
pub fn knn_predict(train: &SupervisedTable, query: &[f64], k: usize) -> Result<f64, LearnerError> {
    if train.is_empty() {
        return Err(LearnerError::EmptyTrain);
    }
    if query.len() != train.feature_count() {
        return Err(LearnerError::Shape {
            expected: train.feature_count(),
            found: query.len(),
        });
    }
    let mut dist: Vec<(f64, usize)> = train
        .features()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let d2: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2, i)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let k = k.clamp(1, dist.len());
    let targets = train.targets();
    Ok(dist[..k].iter().map(|&(_, i)| targets[i]).sum::<f64>() / k as f64)
}
