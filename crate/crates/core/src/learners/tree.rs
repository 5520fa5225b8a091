//! Greedy CART regression tree.
//!
//! Splits minimize the summed squared error of the two children. Thresholds
//! are midpoints between consecutive distinct values; ties go to the lower
//! feature index, then the lower threshold.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::LearnerError;
use crate::data::SupervisedTable;

/// Relative slack under which two split scores count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

/// Hyperparameters of a CART fit.
///
/// `max_depth = None` grows until the leaf/split constraints or purity stop
/// it. `min_samples_split` may hold values below 2; [`Self::effective_min_split`]
/// is what the fit uses.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CartHyperParams {
    pub max_feature: f64,
    pub max_depth: Option<u32>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl Default for CartHyperParams {
    fn default() -> Self {
        CartHyperParams {
            max_feature: 1.0,
            max_depth: None,
            min_samples_leaf: 1,
            min_samples_split: 2,
        }
    }
}

impl CartHyperParams {
    pub const MAX_FEATURE_RANGE: (f64, f64) = (0.01, 1.0);
    pub const MAX_DEPTH_RANGE: (u32, u32) = (1, 12);
    pub const MIN_SAMPLES_LEAF_RANGE: (usize, usize) = (1, 12);
    pub const MIN_SAMPLES_SPLIT_RANGE: (usize, usize) = (0, 20);

    pub fn effective_min_split(&self) -> usize {
        self.min_samples_split.max(2)
    }

    /// Number of candidate features examined per split.
    pub fn candidate_count(&self, feature_count: usize) -> usize {
        let k = libm::ceil(self.max_feature * feature_count as f64);
        (k.max(1.0) as usize).min(feature_count.max(1))
    }

    /// True when every field lies inside the tuning box.
    pub fn within_tuning_box(&self) -> bool {
        let (fl, fh) = Self::MAX_FEATURE_RANGE;
        let (dl, dh) = Self::MAX_DEPTH_RANGE;
        let (ll, lh) = Self::MIN_SAMPLES_LEAF_RANGE;
        let (sl, sh) = Self::MIN_SAMPLES_SPLIT_RANGE;
        (fl..=fh).contains(&self.max_feature)
            && self.max_depth.is_some_and(|d| (dl..=dh).contains(&d))
            && (ll..=lh).contains(&self.min_samples_leaf)
            && (sl..=sh).contains(&self.min_samples_split)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        samples: usize,
    },
    Leaf {
        value: f64,
        samples: usize,
    },
}

impl Node {
    pub fn samples(&self) -> usize {
        match *self {
            Node::Split { samples, .. } | Node::Leaf { samples, .. } => samples,
        }
    }
}

/// A fitted tree stored as an arena; node 0 is the root.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RegressionTree {
    nodes: Vec<Node>,
    feature_count: usize,
}

impl RegressionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> u32 {
        fn walk(nodes: &[Node], id: usize) -> u32 {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Feature indices referenced by at least one internal node.
    pub fn split_features(&self) -> BTreeSet<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match *n {
                Node::Split { feature, .. } => Some(feature),
                Node::Leaf { .. } => None,
            })
            .collect()
    }

    pub fn predict(&self, features: &[f64]) -> Result<f64, LearnerError> {
        if features.len() != self.feature_count {
            return Err(LearnerError::Shape {
                expected: self.feature_count,
                found: features.len(),
            });
        }
        Ok(self.predict_unchecked(features))
    }

    pub(crate) fn predict_unchecked(&self, features: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    id = if features[feature] <= threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Summed squared error over a table.
    pub fn sse(&self, table: &SupervisedTable) -> f64 {
        table
            .features()
            .iter()
            .zip(table.targets())
            .map(|(x, &y)| {
                let e = self.predict_unchecked(x) - y;
                e * e
            })
            .sum()
    }
}

/// Fits a tree on every row of `train`.
pub fn cart_fit(
    train: &SupervisedTable,
    hp: &CartHyperParams,
    seed: u64,
) -> Result<RegressionTree, LearnerError> {
    let rows: Vec<usize> = (0..train.len()).collect();
    fit_rows(train.features(), train.targets(), rows, hp, seed)
}

/// Fits a tree on a multiset of row indices (bootstrap samples repeat rows).
pub(crate) fn fit_rows(
    x: &[Vec<f64>],
    y: &[f64],
    mut rows: Vec<usize>,
    hp: &CartHyperParams,
    seed: u64,
) -> Result<RegressionTree, LearnerError> {
    if rows.is_empty() {
        return Err(LearnerError::EmptyTrain);
    }
    let feature_count = x[rows[0]].len();
    if let Some(&bad) = rows.iter().find(|&&r| x[r].len() != feature_count) {
        return Err(LearnerError::Shape {
            expected: feature_count,
            found: x[bad].len(),
        });
    }
    let mut builder = Builder {
        x,
        y,
        hp,
        candidates: hp.candidate_count(feature_count),
        feature_count,
        rng: ChaCha8Rng::seed_from_u64(seed),
        nodes: Vec::new(),
        scratch: Vec::with_capacity(rows.len()),
    };
    builder.grow(&mut rows, 0);
    Ok(RegressionTree {
        nodes: builder.nodes,
        feature_count,
    })
}

#[derive(Clone, Copy, Debug)]
struct SplitChoice {
    feature: usize,
    threshold: f64,
    score: f64,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    hp: &'a CartHyperParams,
    candidates: usize,
    feature_count: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    scratch: Vec<(f64, f64)>,
}

impl Builder<'_> {
    fn grow(&mut self, rows: &mut [usize], depth: u32) -> usize {
        let n = rows.len();
        let mean = rows.iter().map(|&r| self.y[r]).sum::<f64>() / n as f64;
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: mean,
            samples: n,
        });

        let depth_ok = self.hp.max_depth.is_none_or(|d| depth < d);
        let first = self.y[rows[0]];
        let pure = rows.iter().all(|&r| self.y[r] == first);
        if !depth_ok
            || pure
            || n < self.hp.effective_min_split()
            || n < 2 * self.hp.min_samples_leaf.max(1)
        {
            return id;
        }
        let Some(choice) = self.best_split(rows) else {
            return id;
        };

        let x = self.x;
        let mut cut = 0;
        for i in 0..n {
            if x[rows[i]][choice.feature] <= choice.threshold {
                rows.swap(i, cut);
                cut += 1;
            }
        }
        let (l_rows, r_rows) = rows.split_at_mut(cut);
        let left = self.grow(l_rows, depth + 1);
        let right = self.grow(r_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left,
            right,
            samples: n,
        };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        if self.candidates >= self.feature_count {
            return (0..self.feature_count).collect();
        }
        let mut picked = index::sample(&mut self.rng, self.feature_count, self.candidates).into_vec();
        picked.sort_unstable();
        picked
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<SplitChoice> {
        let n = rows.len();
        let min_leaf = self.hp.min_samples_leaf.max(1);
        let mut best: Option<SplitChoice> = None;
        for feature in self.candidate_features() {
            self.scratch.clear();
            self.scratch
                .extend(rows.iter().map(|&r| (self.x[r][feature], self.y[r])));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));

            let total: f64 = self.scratch.iter().map(|p| p.1).sum();
            let total_sq: f64 = self.scratch.iter().map(|p| p.1 * p.1).sum();
            let mut sum_l = 0.0;
            let mut sq_l = 0.0;
            for p in 1..n {
                let (prev_x, prev_y) = self.scratch[p - 1];
                sum_l += prev_y;
                sq_l += prev_y * prev_y;
                let next_x = self.scratch[p].0;
                if prev_x >= next_x || p < min_leaf || n - p < min_leaf {
                    continue;
                }
                let n_l = p as f64;
                let n_r = (n - p) as f64;
                let sum_r = total - sum_l;
                let sq_r = total_sq - sq_l;
                let score = (sq_l - sum_l * sum_l / n_l) + (sq_r - sum_r * sum_r / n_r);
                if best.is_none_or(|b| improves(score, b.score)) {
                    best = Some(SplitChoice {
                        feature,
                        threshold: midpoint(prev_x, next_x),
                        score,
                    });
                }
            }
        }
        best
    }
}

/// Strict improvement beyond the tie tolerance.
pub(crate) fn improves(candidate: f64, incumbent: f64) -> bool {
    candidate < incumbent - TIE_TOLERANCE * (1.0 + incumbent.abs())
}

/// Midpoint that always separates `lo` from `hi`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}
