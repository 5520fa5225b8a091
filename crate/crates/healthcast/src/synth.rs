//! Seeded synthetic project histories.
//!
//! Each project has a latent activity level following a drifting random
//! walk. Five columns are driven directly by it (merged PRs, PR mergers,
//! PR comments, issue comments, forks); the seven health indicators are
//! piecewise-linear functions of those drivers, scaled by multiplicative
//! noise. The maintainer count grows with project age and moves the
//! indicator response into regimes absent from early months, so
//! forecasts from older training windows degrade.

use healthcast_core::data::{Feature, MonthlyRecord, ProjectSeries, YearMonth};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const MIN_MONTHS: u32 = 14;
/// Range of the initial log activity level (about 3 to 250 events a month).
const LEVEL_LO: f64 = 1.0;
const LEVEL_HI: f64 = 5.5;
/// Per-project noise is `noise_scale * exp(u)`, `u` uniform in `±SPREAD`.
const SPREAD: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub projects: usize,
    pub months: u32,
    /// Median standard deviation of the multiplicative noise on indicator
    /// columns (each project draws its own around it); zero makes every
    /// indicator an exact function of the drivers.
    pub noise_scale: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.projects == 0 {
            return Err(Error::config("synthetic corpus needs at least one project"));
        }
        if self.months < MIN_MONTHS {
            return Err(Error::config(format!(
                "synthetic projects need at least {MIN_MONTHS} months, got {}",
                self.months
            )));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::config("noise_scale must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Driver columns, independent of the noise scale.
#[derive(Clone, Copy, Debug)]
struct Drivers {
    merged: f64,
    mergers: f64,
    pr_comments: f64,
    issue_comments: f64,
    forks: f64,
}

/// Indicator columns as exact functions of the drivers.
fn indicators(d: &Drivers) -> [(Feature, f64); 7] {
    let senior = d.mergers >= 3.0;
    let busy = d.pr_comments > 40.0;
    [
        (
            Feature::Commits,
            d.merged * if senior { 3.0 } else { 6.0 } + if busy { 25.0 } else { 8.0 },
        ),
        (
            Feature::Contributors,
            d.mergers + if d.merged > 10.0 { 6.0 } else { 2.0 } + if busy { 3.0 } else { 0.0 },
        ),
        (
            Feature::Stars,
            d.forks * if senior { 2.0 } else { 5.0 } + if d.issue_comments > 50.0 { 40.0 } else { 12.0 },
        ),
        (
            Feature::OpenPrs,
            d.merged + if busy { 9.0 } else { 3.0 } + if senior { 4.0 } else { 0.0 },
        ),
        (
            Feature::ClosedPrs,
            d.merged + d.mergers + if d.pr_comments > 25.0 { 6.0 } else { 2.0 },
        ),
        (
            Feature::OpenIssues,
            if d.issue_comments > 50.0 { 20.0 } else { 7.0 } + if senior { 8.0 } else { 2.0 },
        ),
        (
            Feature::ClosedIssues,
            d.mergers * 3.0 + if d.issue_comments > 35.0 { 14.0 } else { 5.0 },
        ),
    ]
}

fn project(spec: &SyntheticSpec, index: usize) -> ProjectSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let start = YearMonth::new(2015, 1).unwrap().plus(rng.random_range(0..24));
    let mut level: f64 = rng.random_range(LEVEL_LO..LEVEL_HI);
    let drift: f64 = rng.random_range(-0.01..0.02);
    let maintainer_period: f64 = rng.random_range(8.0..20.0);
    let noise = spec.noise_scale * rng.random_range(-SPREAD..SPREAD).exp();

    let records = (0..spec.months)
        .map(|i| {
            level += drift + 0.08 * std_normal.sample(&mut rng);
            let activity = level.exp();
            let mut jitter = |scale: f64| (activity * scale * (1.0 + 0.15 * std_normal.sample(&mut rng))).max(0.0).round();
            let d = Drivers {
                merged: jitter(0.25),
                pr_comments: jitter(1.0),
                issue_comments: jitter(1.3),
                forks: jitter(0.12),
                mergers: (1.0 + (i as f64 / maintainer_period).floor()).min(6.0),
            };
            let mut rec = MonthlyRecord::zero(i + 1, start.plus(i));
            rec.set(Feature::MergedPrs, d.merged as i64);
            rec.set(Feature::PrMergers, d.mergers as i64);
            rec.set(Feature::PrComments, d.pr_comments as i64);
            rec.set(Feature::IssueComments, d.issue_comments as i64);
            rec.set(Feature::Forks, d.forks as i64);
            for (f, v) in indicators(&d) {
                let noisy = v * (1.0 + noise * std_normal.sample(&mut rng));
                rec.set(f, noisy.max(0.0).round() as i64);
            }
            rec
        })
        .collect();
    ProjectSeries {
        project_id: format!("synth/p{index:03}"),
        start_month: start,
        records,
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<ProjectSeries>, Error> {
    spec.validate()?;
    Ok((0..spec.projects).map(|i| project(spec, i)).collect())
}
