//! Ordinary least squares with intercept.
//!
//! Solved through the centred normal equations by Cholesky. Monthly counts
//! are often collinear; when the Gram matrix is not positive definite a
//! ridge of `1e-8` (scaled by the mean diagonal) is added and grown tenfold
//! until the factorisation succeeds.

use alloc::vec;
use alloc::vec::Vec;

use super::LearnerError;
use crate::data::SupervisedTable;

const RIDGE: f64 = 1e-8;
const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Ridge actually added to the diagonal; zero for a plain OLS solve.
    pub ridge: f64,
}

impl LinearModel {
    pub fn fit(train: &SupervisedTable) -> Result<LinearModel, LearnerError> {
        if train.is_empty() {
            return Err(LearnerError::EmptyTrain);
        }
        let x = train.features();
        let y = train.targets();
        let n = y.len() as f64;
        let p = train.feature_count();

        let mut x_mean = vec![0.0; p];
        for row in x {
            for (m, v) in x_mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let y_mean = y.iter().sum::<f64>() / n;

        let mut gram = vec![0.0; p * p];
        let mut rhs = vec![0.0; p];
        let mut centred = vec![0.0; p];
        for (row, &t) in x.iter().zip(y) {
            for j in 0..p {
                centred[j] = row[j] - x_mean[j];
            }
            let tc = t - y_mean;
            for j in 0..p {
                rhs[j] += centred[j] * tc;
                for k in 0..=j {
                    gram[j * p + k] += centred[j] * centred[k];
                }
            }
        }
        for j in 0..p {
            for k in 0..j {
                gram[k * p + j] = gram[j * p + k];
            }
        }

        let scale = if p == 0 {
            1.0
        } else {
            let mean_diag = (0..p).map(|j| gram[j * p + j]).sum::<f64>() / p as f64;
            if mean_diag > 0.0 {
                mean_diag
            } else {
                1.0
            }
        };
        let mut ridge = 0.0;
        let coefficients = loop {
            let mut a = gram.clone();
            for j in 0..p {
                a[j * p + j] += ridge;
            }
            if let Some(chol) = cholesky(&mut a, p) {
                break solve(chol, p, &rhs);
            }
            ridge = if ridge == 0.0 { RIDGE * scale } else { ridge * 10.0 };
            if !ridge.is_finite() {
                return Err(LearnerError::Numerical("normal equations did not factorise"));
            }
        };
        let intercept = y_mean
            - coefficients
                .iter()
                .zip(&x_mean)
                .map(|(c, m)| c * m)
                .sum::<f64>();
        Ok(LinearModel {
            intercept,
            coefficients,
            ridge,
        })
    }

    pub fn predict(&self, features: &[f64]) -> Result<f64, LearnerError> {
        if features.len() != self.coefficients.len() {
            return Err(LearnerError::Shape {
                expected: self.coefficients.len(),
                found: features.len(),
            });
        }
        Ok(self.intercept
            + self
                .coefficients
                .iter()
                .zip(features)
                .map(|(c, x)| c * x)
                .sum::<f64>())
    }
}

/// In-place lower Cholesky factor; `None` if not numerically positive definite.
fn cholesky(a: &mut [f64], p: usize) -> Option<&[f64]> {
    let max_diag = (0..p).map(|j| a[j * p + j]).fold(0.0, f64::max);
    let floor = PIVOT_TOLERANCE * max_diag.max(f64::MIN_POSITIVE);
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= a[j * p + k] * a[j * p + k];
        }
        if d.is_nan() || d <= floor {
            return None;
        }
        let d = libm::sqrt(d);
        a[j * p + j] = d;
        for i in (j + 1)..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = s / d;
        }
    }
    Some(a)
}

fn solve(l: &[f64], p: usize, b: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; p];
    for i in 0..p {
        let s: f64 = (0..i).map(|k| l[i * p + k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = ((i + 1)..p).map(|k| l[k * p + i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i * p + i];
    }
    x
}
