//! The evaluation grid: every (project, indicator, horizon, learner) task
//! is split, fitted, scored at its test month, and collected in a stable
//! order.

use std::fs;
use std::path::{Path, PathBuf};

use healthcast_core::analysis::{tree_features, EvalOutcome, Horizon};
use healthcast_core::data::{split_horizon, split_midway, DataError, HorizonSplit, IndicatorId, ProjectSeries};
use healthcast_core::learners::{baseline_fit_predict, cart_fit, CartHyperParams, LearnerKind, LearnerSpec, RegressionTree};
use healthcast_core::metrics::{mre, sa, EvalPoint};
use healthcast_core::tuning::{decart_tune, DeConfig, TunedCart};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::csvio;
use crate::error::Error;

pub const HORIZONS: [u32; 4] = [1, 3, 6, 12];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub dataset_dir: PathBuf,
    pub indicators: Vec<IndicatorId>,
    pub horizons: Vec<u32>,
    pub learners: Vec<LearnerKind>,
    pub master_seed: u64,
    /// Train on the first half of each series and test twelve months later,
    /// instead of the end-anchored horizons.
    pub midway: bool,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), Error> {
        if self.indicators.is_empty() || self.learners.is_empty() {
            return Err(Error::config("plan needs at least one indicator and one learner"));
        }
        if !self.midway && self.horizons.is_empty() {
            return Err(Error::config("plan needs at least one horizon"));
        }
        if let Some(h) = self.horizons.iter().find(|h| !HORIZONS.contains(h)) {
            return Err(Error::config(format!("horizon {h} not one of 1, 3, 6, 12")));
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        Grid {
            indicators: self.indicators.clone(),
            horizons: if self.midway {
                vec![Horizon::Midway]
            } else {
                self.horizons.iter().map(|&h| Horizon::Months(h)).collect()
            },
            learners: self.learners.clone(),
        }
    }
}

/// The non-project axes of the task grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub indicators: Vec<IndicatorId>,
    pub horizons: Vec<Horizon>,
    pub learners: Vec<LearnerKind>,
}

impl Grid {
    pub fn full() -> Grid {
        Grid {
            indicators: IndicatorId::ALL.to_vec(),
            horizons: HORIZONS.iter().map(|&h| Horizon::Months(h)).collect(),
            learners: LearnerKind::ALL.to_vec(),
        }
    }

    pub fn tasks_per_project(&self) -> usize {
        self.indicators.len() * self.horizons.len() * self.learners.len()
    }
}

/// A planned task that could not run because its series is too short.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SkipRecord {
    pub project_id: String,
    pub indicator: IndicatorId,
    pub horizon: Horizon,
    pub learner: LearnerKind,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Results {
    pub outcomes: Vec<EvalOutcome>,
    pub skips: Vec<SkipRecord>,
}

/// Stable per-task seed: the first eight bytes of
/// `sha256("{master}|{project}|{indicator}|{horizon}|{learner}")`.
pub fn task_seed(master: u64, project_id: &str, indicator: IndicatorId, horizon: Horizon, learner: LearnerKind) -> u64 {
    let digest = Sha256::digest(format!("{master}|{project_id}|{indicator}|{horizon}|{learner}").as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn split(series: &ProjectSeries, indicator: IndicatorId, horizon: Horizon) -> Result<HorizonSplit, DataError> {
    match horizon {
        Horizon::Months(h) => split_horizon(series, indicator, h),
        Horizon::Midway => split_midway(series, indicator),
    }
}

/// DECART, or default CART with `fallback = true` when tuning is impossible.
pub fn tune_or_fallback(train: &healthcast_core::data::SupervisedTable, cfg: &DeConfig, seed: u64) -> Result<(RegressionTree, Option<TunedCart>), Error> {
    match decart_tune(train, cfg, seed) {
        Ok(t) => Ok((t.tree.clone(), Some(t))),
        Err(e) => {
            log::warn!("tuning failed ({e}); using default CART");
            Ok((cart_fit(train, &CartHyperParams::default(), seed)?, None))
        }
    }
}

pub enum TaskResult {
    Done(EvalOutcome),
    Skipped(SkipRecord),
}

pub fn run_task(series: &ProjectSeries, indicator: IndicatorId, horizon: Horizon, learner: LearnerKind, master_seed: u64) -> Result<TaskResult, Error> {
    let split = match split(series, indicator, horizon) {
        Ok(s) => s,
        Err(DataError::InsufficientData { reason }) => {
            log::info!("skip {} {indicator} h={horizon} {learner}: {reason}", series.project_id);
            return Ok(TaskResult::Skipped(SkipRecord {
                project_id: series.project_id.clone(),
                indicator,
                horizon,
                learner,
                reason,
            }));
        }
        Err(e) => return Err(e.into()),
    };
    let seed = task_seed(master_seed, &series.project_id, indicator, horizon, learner);
    let x = &split.test.features;
    let (predict, tree, fallback) = match learner {
        LearnerKind::Cart => {
            let tree = cart_fit(&split.train, &CartHyperParams::default(), seed)?;
            (tree.predict(x)?, Some(tree), false)
        }
        LearnerKind::Decart => {
            let (tree, tuned) = tune_or_fallback(&split.train, &DeConfig::default(), seed)?;
            (tree.predict(x)?, Some(tree), tuned.is_none())
        }
        other => (
            baseline_fit_predict(&LearnerSpec::default_for(other), &split.train, x, seed)?,
            None,
            false,
        ),
    };
    let point = EvalPoint::new(predict, split.test.actual);
    Ok(TaskResult::Done(EvalOutcome {
        project_id: series.project_id.clone(),
        indicator,
        horizon,
        learner,
        predict,
        actual: split.test.actual,
        mre: mre(point),
        sa: sa(&[point], split.train.targets()).map_err(|e| Error::data(e.to_string()))?,
        features_used: tree.map(|t| tree_features(&t, indicator)),
        fallback,
    }))
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))
}

/// Runs the grid over in-memory series.
pub fn evaluate_series(series: &[ProjectSeries], grid: &Grid, master_seed: u64, jobs: Option<usize>) -> Result<Results, Error> {
    let mut tasks = Vec::with_capacity(series.len() * grid.tasks_per_project());
    for s in series {
        for &i in &grid.indicators {
            for &h in &grid.horizons {
                for &l in &grid.learners {
                    tasks.push((s, i, h, l));
                }
            }
        }
    }
    let done: Vec<TaskResult> = pool(jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|&(s, i, h, l)| run_task(s, i, h, l, master_seed))
            .collect::<Result<_, Error>>()
    })?;
    let mut results = Results::default();
    for r in done {
        match r {
            TaskResult::Done(o) => results.outcomes.push(o),
            TaskResult::Skipped(s) => results.skips.push(s),
        }
    }
    results.outcomes.sort_by(|a, b| {
        (&a.project_id, a.indicator, a.horizon, a.learner).cmp(&(&b.project_id, b.indicator, b.horizon, b.learner))
    });
    results.skips.sort();
    Ok(results)
}

pub fn digest_file(path: &Path) -> Result<InputDigest, Error> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(InputDigest {
        file: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Loads the dataset directory and runs the plan.
pub fn run_experiment(plan: &ExperimentPlan, jobs: Option<usize>) -> Result<(Results, Vec<InputDigest>), Error> {
    plan.validate()?;
    let files = csvio::dataset_files(&plan.dataset_dir)?;
    if files.is_empty() {
        return Err(Error::config(format!(
            "no project CSV files in {}",
            plan.dataset_dir.display()
        )));
    }
    let mut series = Vec::with_capacity(files.len());
    let mut inputs = Vec::with_capacity(files.len());
    for f in &files {
        series.push(csvio::read_series_file(f)?);
        inputs.push(digest_file(f)?);
    }
    let results = evaluate_series(&series, &plan.grid(), plan.master_seed, jobs)?;
    Ok((results, inputs))
}
