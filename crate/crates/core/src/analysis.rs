//! Comparing learners across projects.
//!
//! Two results are "the same" when they differ by less than Cohen's `d`,
//! taken as 0.3 of the population standard deviation of all values being
//! compared. A learner wins a project when it is best or within `d` of the
//! best. Also: per-tree feature usage and the median/IQR report tables.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::data::{Feature, IndicatorId, FEATURE_COUNT};
use crate::learners::{LearnerKind, RegressionTree};
use crate::metrics::{MetricKind, MetricValue};

/// Fraction of the standard deviation treated as a negligible difference.
pub const COHEN_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("{what} needs at least {needed} values, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("missing outcomes: {}", .0.join(", "))]
    Coverage(Vec<String>),
}

/// How far ahead of the training window the test month lies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Horizon {
    /// Train on months `1..=N-h`, test month `N`.
    Months(u32),
    /// Train on months `1..=N/2`, test month `N/2 + 12`.
    Midway,
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Months(h) => write!(f, "{h}"),
            Horizon::Midway => f.write_str("mid"),
        }
    }
}

impl FromStr for Horizon {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "mid" {
            return Ok(Horizon::Midway);
        }
        s.parse::<u32>()
            .map(Horizon::Months)
            .map_err(|_| alloc::format!("bad horizon {s:?}"))
    }
}

#[cfg(feature = "serde")]
impl Serialize for Horizon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <String as Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Scored prediction for one (project, indicator, horizon, learner).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EvalOutcome {
    pub project_id: String,
    pub indicator: IndicatorId,
    pub horizon: Horizon,
    pub learner: LearnerKind,
    pub predict: f64,
    pub actual: f64,
    pub mre: MetricValue,
    pub sa: MetricValue,
    /// Features split on by the fitted tree, for tree learners.
    pub features_used: Option<BTreeSet<Feature>>,
    /// DECART fell back to default CART.
    pub fallback: bool,
}

impl EvalOutcome {
    pub fn metric(&self, metric: MetricKind) -> Option<f64> {
        match metric {
            MetricKind::Mre => self.mre.get(),
            MetricKind::Sa => self.sa.get(),
            MetricKind::Mae => Some(libm::fabs(self.predict - self.actual)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

impl Direction {
    pub fn of(metric: MetricKind) -> Direction {
        if metric.lower_is_better() {
            Direction::LowerBetter
        } else {
            Direction::HigherBetter
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CohenThreshold {
    pub metric: MetricKind,
    pub d: f64,
}

pub fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    libm::sqrt(var)
}

pub fn cohen_threshold(metric: MetricKind, values: &[f64]) -> Result<CohenThreshold, AnalysisError> {
    if values.len() < 2 {
        return Err(AnalysisError::TooFew {
            what: "Cohen's d",
            needed: 2,
            got: values.len(),
        });
    }
    Ok(CohenThreshold {
        metric,
        d: COHEN_FRACTION * population_std(values),
    })
}

/// Which learners are best or within `d` of the best.
pub fn win_flags(
    per_learner: &BTreeMap<LearnerKind, f64>,
    direction: Direction,
    d: &CohenThreshold,
) -> BTreeMap<LearnerKind, bool> {
    let best = match direction {
        Direction::LowerBetter => per_learner.values().copied().fold(f64::INFINITY, f64::min),
        Direction::HigherBetter => per_learner
            .values()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max),
    };
    per_learner
        .iter()
        .map(|(&k, &v)| {
            let gap = libm::fabs(v - best);
            (k, gap == 0.0 || gap < d.d)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct WinRates {
    /// Percentage of compared projects won by each learner.
    pub rates: BTreeMap<LearnerKind, f64>,
    pub threshold: CohenThreshold,
    pub projects: usize,
    /// Projects left out because some learner's metric was undefined.
    pub excluded: usize,
}

pub fn win_rates(
    outcomes: &[EvalOutcome],
    metric: MetricKind,
    indicator: IndicatorId,
    horizon: Horizon,
) -> Result<WinRates, AnalysisError> {
    let mut by_project: BTreeMap<&str, BTreeMap<LearnerKind, Option<f64>>> = BTreeMap::new();
    let mut learners = BTreeSet::new();
    for o in outcomes
        .iter()
        .filter(|o| o.indicator == indicator && o.horizon == horizon)
    {
        learners.insert(o.learner);
        by_project
            .entry(o.project_id.as_str())
            .or_default()
            .insert(o.learner, o.metric(metric));
    }
    let mut missing = Vec::new();
    for (project, values) in &by_project {
        for l in &learners {
            if !values.contains_key(l) {
                missing.push(alloc::format!("{project}/{indicator}/{horizon}/{l}"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(AnalysisError::Coverage(missing));
    }

    let mut complete: Vec<BTreeMap<LearnerKind, f64>> = Vec::new();
    let mut excluded = 0;
    for values in by_project.values() {
        let defined: Option<BTreeMap<_, _>> =
            values.iter().map(|(&k, v)| v.map(|v| (k, v))).collect();
        match defined {
            Some(m) => complete.push(m),
            None => excluded += 1,
        }
    }
    let pooled: Vec<f64> = complete.iter().flat_map(|m| m.values().copied()).collect();
    let threshold = if pooled.len() >= 2 {
        cohen_threshold(metric, &pooled)?
    } else {
        CohenThreshold { metric, d: 0.0 }
    };
    let direction = Direction::of(metric);
    let mut wins: BTreeMap<LearnerKind, usize> = learners.iter().map(|&l| (l, 0)).collect();
    for m in &complete {
        for (l, won) in win_flags(m, direction, &threshold) {
            if won {
                *wins.entry(l).or_default() += 1;
            }
        }
    }
    let projects = complete.len();
    let rates = wins
        .into_iter()
        .map(|(l, w)| {
            let pct = if projects == 0 {
                0.0
            } else {
                100.0 * w as f64 / projects as f64
            };
            (l, pct)
        })
        .collect();
    Ok(WinRates {
        rates,
        threshold,
        projects,
        excluded,
    })
}

/// How many projects' trees split on each input feature.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FeatureUsage {
    pub target: IndicatorId,
    pub projects: usize,
    /// Indexed by [`Feature::index`]; `None` for the target column.
    pub counts: [Option<usize>; FEATURE_COUNT],
}

impl FeatureUsage {
    pub fn percentage(&self, feature: Feature) -> Option<f64> {
        self.counts[feature.index()].map(|c| {
            if self.projects == 0 {
                0.0
            } else {
                100.0 * c as f64 / self.projects as f64
            }
        })
    }
}

/// Counts feature presence over per-project sets of used features.
pub fn feature_usage_from_sets<'a, I>(sets: I, target: IndicatorId) -> Result<FeatureUsage, AnalysisError>
where
    I: IntoIterator<Item = &'a BTreeSet<Feature>>,
{
    let mut counts = [Some(0usize); FEATURE_COUNT];
    counts[target.column().index()] = None;
    let mut projects = 0;
    for set in sets {
        projects += 1;
        for f in set {
            if let Some(c) = counts[f.index()].as_mut() {
                *c += 1;
            }
        }
    }
    if projects == 0 {
        return Err(AnalysisError::TooFew {
            what: "feature usage",
            needed: 1,
            got: 0,
        });
    }
    Ok(FeatureUsage {
        target,
        projects,
        counts,
    })
}

/// Features referenced by a tree fitted on `target`'s input columns.
pub fn tree_features(tree: &RegressionTree, target: IndicatorId) -> BTreeSet<Feature> {
    let inputs = target.input_features();
    tree.split_features().into_iter().map(|i| inputs[i]).collect()
}

pub fn feature_usage(
    trees: &BTreeMap<String, RegressionTree>,
    target: IndicatorId,
) -> Result<FeatureUsage, AnalysisError> {
    let sets: Vec<BTreeSet<Feature>> = trees.values().map(|t| tree_features(t, target)).collect();
    feature_usage_from_sets(&sets, target)
}

/// Percentile by linear interpolation between closest ranks.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

pub fn median(values: &[f64]) -> Option<f64> {
    percentile(values, 0.5)
}

pub fn iqr(values: &[f64]) -> Option<f64> {
    Some(percentile(values, 0.75)? - percentile(values, 0.25)?)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SummaryCell {
    pub projects: usize,
    pub mre_median: Option<f64>,
    pub mre_iqr: Option<f64>,
    pub sa_median: Option<f64>,
    pub sa_iqr: Option<f64>,
    /// Projects whose SA was undefined.
    pub sa_excluded: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stat {
    MreMedian,
    MreIqr,
    SaMedian,
    SaIqr,
}

impl SummaryCell {
    pub fn stat(&self, stat: Stat) -> Option<f64> {
        match stat {
            Stat::MreMedian => self.mre_median,
            Stat::MreIqr => self.mre_iqr,
            Stat::SaMedian => self.sa_median,
            Stat::SaIqr => self.sa_iqr,
        }
    }
}

pub type CellKey = (IndicatorId, LearnerKind, Horizon);

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportTables {
    pub indicators: Vec<IndicatorId>,
    pub learners: Vec<LearnerKind>,
    pub horizons: Vec<Horizon>,
    pub cells: BTreeMap<CellKey, SummaryCell>,
    pub mre_wins: BTreeMap<(IndicatorId, Horizon), WinRates>,
    pub sa_wins: BTreeMap<(IndicatorId, Horizon), WinRates>,
    /// One entry per target, from the tuned trees at the shortest horizon.
    pub feature_usage: Vec<FeatureUsage>,
}

impl ReportTables {
    /// A statistic at `horizon` as a percentage of the same statistic at
    /// one month.
    pub fn ratio(&self, indicator: IndicatorId, learner: LearnerKind, horizon: Horizon, stat: Stat) -> Option<f64> {
        let base = self
            .cells
            .get(&(indicator, learner, Horizon::Months(1)))?
            .stat(stat)?;
        let value = self.cells.get(&(indicator, learner, horizon))?.stat(stat)?;
        (base != 0.0).then(|| 100.0 * value / base)
    }
}

pub fn summarize(outcomes: &[EvalOutcome]) -> ReportTables {
    let mut groups: BTreeMap<CellKey, Vec<&EvalOutcome>> = BTreeMap::new();
    for o in outcomes {
        groups
            .entry((o.indicator, o.learner, o.horizon))
            .or_default()
            .push(o);
    }
    let indicators: BTreeSet<_> = groups.keys().map(|k| k.0).collect();
    let learners: BTreeSet<_> = groups.keys().map(|k| k.1).collect();
    let horizons: BTreeSet<_> = groups.keys().map(|k| k.2).collect();

    let cells = groups
        .iter()
        .map(|(&key, group)| {
            let mre: Vec<f64> = group.iter().filter_map(|o| o.mre.get()).collect();
            let sa: Vec<f64> = group.iter().filter_map(|o| o.sa.get()).collect();
            let cell = SummaryCell {
                projects: group.len(),
                mre_median: median(&mre),
                mre_iqr: iqr(&mre),
                sa_median: median(&sa),
                sa_iqr: iqr(&sa),
                sa_excluded: group.len() - sa.len(),
            };
            (key, cell)
        })
        .collect();

    let mut mre_wins = BTreeMap::new();
    let mut sa_wins = BTreeMap::new();
    for &i in &indicators {
        for &h in &horizons {
            if let Ok(w) = win_rates(outcomes, MetricKind::Mre, i, h) {
                mre_wins.insert((i, h), w);
            }
            if let Ok(w) = win_rates(outcomes, MetricKind::Sa, i, h) {
                sa_wins.insert((i, h), w);
            }
        }
    }

    let tree_learner = if learners.contains(&LearnerKind::Decart) {
        Some(LearnerKind::Decart)
    } else if learners.contains(&LearnerKind::Cart) {
        Some(LearnerKind::Cart)
    } else {
        None
    };
    let mut feature_usage = Vec::new();
    if let (Some(learner), Some(&horizon)) = (tree_learner, horizons.iter().next()) {
        for &i in &indicators {
            let sets = outcomes
                .iter()
                .filter(|o| o.indicator == i && o.learner == learner && o.horizon == horizon)
                .filter_map(|o| o.features_used.as_ref());
            if let Ok(u) = feature_usage_from_sets(sets, i) {
                feature_usage.push(u);
            }
        }
    }

    ReportTables {
        indicators: indicators.into_iter().collect(),
        learners: learners.into_iter().collect(),
        horizons: horizons.into_iter().collect(),
        cells,
        mre_wins,
        sa_wins,
        feature_usage,
    }
}
