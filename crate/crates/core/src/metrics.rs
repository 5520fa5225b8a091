//! Magnitude of relative error and standardized accuracy.

use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// MRE assigned when the actual value is zero and the prediction is not.
pub const ZERO_ACTUAL_MRE: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum MetricKind {
    Mre,
    Sa,
    Mae,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Mre => "MRE",
            MetricKind::Sa => "SA",
            MetricKind::Mae => "MAE",
        }
    }

    pub fn lower_is_better(self) -> bool {
        !matches!(self, MetricKind::Sa)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EvalPoint {
    pub predict: f64,
    pub actual: f64,
}

impl EvalPoint {
    pub fn new(predict: f64, actual: f64) -> EvalPoint {
        EvalPoint { predict, actual }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MetricValue {
    pub metric: MetricKind,
    pub value: f64,
    /// False when the metric is degenerate (SA with a zero baseline error).
    pub defined: bool,
}

impl MetricValue {
    fn defined(metric: MetricKind, value: f64) -> MetricValue {
        MetricValue {
            metric,
            value,
            defined: true,
        }
    }

    pub fn get(&self) -> Option<f64> {
        self.defined.then_some(self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("{0} needs at least one value")]
    Empty(&'static str),
}

pub fn mre(p: EvalPoint) -> MetricValue {
    let value = if p.actual != 0.0 {
        libm::fabs(p.predict - p.actual) / libm::fabs(p.actual)
    } else if p.predict == 0.0 {
        0.0
    } else {
        ZERO_ACTUAL_MRE
    };
    MetricValue::defined(MetricKind::Mre, value)
}

pub fn mae(points: &[EvalPoint]) -> Result<MetricValue, MetricError> {
    if points.is_empty() {
        return Err(MetricError::Empty("MAE"));
    }
    let total: f64 = points
        .iter()
        .map(|p| libm::fabs(p.predict - p.actual))
        .sum();
    Ok(MetricValue::defined(
        MetricKind::Mae,
        total / points.len() as f64,
    ))
}

/// MAE of always predicting the mean of `train_targets`.
pub fn mae_guess(points: &[EvalPoint], train_targets: &[f64]) -> Result<f64, MetricError> {
    if train_targets.is_empty() {
        return Err(MetricError::Empty("training targets"));
    }
    if points.is_empty() {
        return Err(MetricError::Empty("MAE"));
    }
    let mean = train_targets.iter().sum::<f64>() / train_targets.len() as f64;
    let total: f64 = points.iter().map(|p| libm::fabs(mean - p.actual)).sum();
    Ok(total / points.len() as f64)
}

/// `(1 - MAE / MAE_guess) * 100`, undefined when `MAE_guess` is zero and the
/// predictions are not perfect.
pub fn sa(points: &[EvalPoint], train_targets: &[f64]) -> Result<MetricValue, MetricError> {
    let error = mae(points)?.value;
    let guess = mae_guess(points, train_targets)?;
    Ok(if guess > 0.0 {
        MetricValue::defined(MetricKind::Sa, (1.0 - error / guess) * 100.0)
    } else if error == 0.0 {
        MetricValue::defined(MetricKind::Sa, 100.0)
    } else {
        MetricValue {
            metric: MetricKind::Sa,
            value: f64::NAN,
            defined: false,
        }
    })
}
