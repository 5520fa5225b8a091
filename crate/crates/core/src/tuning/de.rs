//! Storn-style differential evolution over a box, with a "lives" patience
//! budget.
//!
//! Each generation rebuilds the frontier into a fresh buffer: every member
//! `old` draws three distinct other members `x, y, z`, and each coordinate is
//! replaced with probability `cf` by `x + f * (z - y)`. The child is clipped
//! into the box and replaces `old` only on strict improvement. A new global
//! best earns one extra life; one life is spent per generation.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::TuningError;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DeConfig {
    /// Frontier size `np`.
    pub population: usize,
    /// Crossover probability `cf`.
    pub crossover: f64,
    /// Differential weight `f`.
    pub weight: f64,
    pub lives: u32,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            population: 20,
            crossover: 0.75,
            weight: 0.3,
            lives: 10,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<(), TuningError> {
        if self.population < 4 {
            return Err(TuningError::Config(format!(
                "population {} < 4",
                self.population
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(TuningError::Config(format!(
                "crossover {} outside [0, 1]",
                self.crossover
            )));
        }
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(TuningError::Config(format!(
                "weight {} must be positive",
                self.weight
            )));
        }
        if self.lives < 1 {
            return Err(TuningError::Config("lives must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum ParamKind {
    Continuous,
    Integer,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Dimension {
    pub low: f64,
    pub high: f64,
    pub kind: ParamKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchBox {
    dims: Vec<Dimension>,
}

impl SearchBox {
    pub fn new(dims: Vec<Dimension>) -> Result<SearchBox, TuningError> {
        if dims.is_empty() {
            return Err(TuningError::Config("search box has no dimensions".into()));
        }
        for (j, d) in dims.iter().enumerate() {
            if !(d.low.is_finite() && d.high.is_finite() && d.low < d.high) {
                return Err(TuningError::Config(format!(
                    "dimension {j} is degenerate: [{}, {}]",
                    d.low, d.high
                )));
            }
        }
        Ok(SearchBox { dims })
    }

    /// The CART tuning box: max_feature, max_depth, min_samples_leaf,
    /// min_samples_split.
    pub fn cart() -> SearchBox {
        use crate::learners::CartHyperParams as Hp;
        let int = |(lo, hi): (usize, usize)| Dimension {
            low: lo as f64,
            high: hi as f64,
            kind: ParamKind::Integer,
        };
        SearchBox {
            dims: alloc::vec![
                Dimension {
                    low: Hp::MAX_FEATURE_RANGE.0,
                    high: Hp::MAX_FEATURE_RANGE.1,
                    kind: ParamKind::Continuous,
                },
                int((Hp::MAX_DEPTH_RANGE.0 as usize, Hp::MAX_DEPTH_RANGE.1 as usize)),
                int(Hp::MIN_SAMPLES_LEAF_RANGE),
                int(Hp::MIN_SAMPLES_SPLIT_RANGE),
            ],
        }
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn clip(&self, v: &mut [f64]) {
        for (x, d) in v.iter_mut().zip(&self.dims) {
            *x = x.clamp(d.low, d.high);
        }
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.len() == self.dims.len()
            && v
                .iter()
                .zip(&self.dims)
                .all(|(x, d)| (d.low..=d.high).contains(x))
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.dims
            .iter()
            .map(|d| d.low + (d.high - d.low) * rng.random::<f64>())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GenerationBest {
    /// 0 is the initial frontier.
    pub generation: usize,
    pub best_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeOutcome {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub generations: usize,
    /// Final frontier with cached objective values.
    pub frontier: Vec<(Vec<f64>, f64)>,
    pub log: Vec<GenerationBest>,
}

/// NaN objectives rank worst.
fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `objective` over `bbox`.
pub fn de_optimize<F>(
    mut objective: F,
    bbox: &SearchBox,
    cfg: &DeConfig,
    seed: u64,
) -> Result<DeOutcome, TuningError>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    SearchBox::new(bbox.dims.clone())?;
    let np = cfg.population;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evaluations = 0usize;

    let mut frontier: Vec<(Vec<f64>, f64)> = (0..np)
        .map(|_| {
            let v = bbox.sample(&mut rng);
            evaluations += 1;
            let s = score(objective(&v));
            (v, s)
        })
        .collect();

    let mut best_at = 0;
    for (i, m) in frontier.iter().enumerate() {
        if m.1 < frontier[best_at].1 {
            best_at = i;
        }
    }
    let (mut best, mut best_value) = frontier[best_at].clone();
    let mut log = alloc::vec![GenerationBest {
        generation: 0,
        best_value,
    }];

    let mut lives = cfg.lives as i64;
    let mut generations = 0;
    while lives > 0 {
        generations += 1;
        let mut next = Vec::with_capacity(np);
        for i in 0..np {
            let donors = index::sample(&mut rng, np - 1, 3);
            let pick = |k: usize| {
                let j = donors.index(k);
                if j >= i {
                    j + 1
                } else {
                    j
                }
            };
            let (x, y, z) = (&frontier[pick(0)].0, &frontier[pick(1)].0, &frontier[pick(2)].0);
            let old = &frontier[i];
            let mut child = old.0.clone();
            for j in 0..child.len() {
                if rng.random::<f64>() < cfg.crossover {
                    child[j] = x[j] + cfg.weight * (z[j] - y[j]);
                }
            }
            bbox.clip(&mut child);
            evaluations += 1;
            let value = score(objective(&child));
            if value < old.1 {
                if value < best_value {
                    best_value = value;
                    best.clone_from(&child);
                    lives += 1;
                }
                next.push((child, value));
            } else {
                next.push(old.clone());
            }
        }
        frontier = next;
        lives -= 1;
        log.push(GenerationBest {
            generation: generations,
            best_value,
        });
    }

    Ok(DeOutcome {
        best,
        best_value,
        evaluations,
        generations,
        frontier,
        log,
    })
}
