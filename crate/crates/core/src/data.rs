//! Monthly activity schema, project series and the transforms that turn a
//! series into supervised training tables.
//!
//! Feature order is fixed everywhere (records, CSV columns, tree feature
//! indices, reports) to the order of [`Feature::ALL`].

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Number of monthly activity counts per record.
pub const FEATURE_COUNT: usize = 12;

/// Number of input features once the target column is removed.
pub const INPUT_COUNT: usize = FEATURE_COUNT - 1;

/// Minimum number of training months for any split.
pub const MIN_TRAIN_MONTHS: u32 = 2;

/// Minimum series length for the mid-project protocol.
pub const MIDWAY_MIN_MONTHS: u32 = 26;

/// Months predicted ahead by the mid-project protocol.
pub const MIDWAY_LEAD: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Feature {
    Commits,
    Contributors,
    Stars,
    OpenPrs,
    ClosedPrs,
    MergedPrs,
    PrMergers,
    PrComments,
    OpenIssues,
    ClosedIssues,
    IssueComments,
    Forks,
}

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::Commits,
        Feature::Contributors,
        Feature::Stars,
        Feature::OpenPrs,
        Feature::ClosedPrs,
        Feature::MergedPrs,
        Feature::PrMergers,
        Feature::PrComments,
        Feature::OpenIssues,
        Feature::ClosedIssues,
        Feature::IssueComments,
        Feature::Forks,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column name used in project CSV files.
    pub fn name(self) -> &'static str {
        match self {
            Feature::Commits => "commits",
            Feature::Contributors => "contributors",
            Feature::Stars => "stars",
            Feature::OpenPrs => "open_prs",
            Feature::ClosedPrs => "closed_prs",
            Feature::MergedPrs => "merged_prs",
            Feature::PrMergers => "pr_mergers",
            Feature::PrComments => "pr_comments",
            Feature::OpenIssues => "open_issues",
            Feature::ClosedIssues => "closed_issues",
            Feature::IssueComments => "issue_comments",
            Feature::Forks => "forks",
        }
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        Feature::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The seven predictable health indicators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum IndicatorId {
    #[cfg_attr(feature = "serde", serde(rename = "commit"))]
    Commit,
    #[cfg_attr(feature = "serde", serde(rename = "contributor"))]
    Contributor,
    #[cfg_attr(feature = "serde", serde(rename = "star"))]
    Star,
    #[cfg_attr(feature = "serde", serde(rename = "openPR"))]
    OpenPr,
    #[cfg_attr(feature = "serde", serde(rename = "closePR"))]
    ClosePr,
    #[cfg_attr(feature = "serde", serde(rename = "openISSUE"))]
    OpenIssue,
    #[cfg_attr(feature = "serde", serde(rename = "closedISSUE"))]
    ClosedIssue,
}

impl IndicatorId {
    pub const ALL: [IndicatorId; 7] = [
        IndicatorId::Commit,
        IndicatorId::Contributor,
        IndicatorId::Star,
        IndicatorId::OpenPr,
        IndicatorId::ClosePr,
        IndicatorId::OpenIssue,
        IndicatorId::ClosedIssue,
    ];

    /// The record column this indicator predicts.
    pub fn column(self) -> Feature {
        match self {
            IndicatorId::Commit => Feature::Commits,
            IndicatorId::Contributor => Feature::Contributors,
            IndicatorId::Star => Feature::Stars,
            IndicatorId::OpenPr => Feature::OpenPrs,
            IndicatorId::ClosePr => Feature::ClosedPrs,
            IndicatorId::OpenIssue => Feature::OpenIssues,
            IndicatorId::ClosedIssue => Feature::ClosedIssues,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IndicatorId::Commit => "commit",
            IndicatorId::Contributor => "contributor",
            IndicatorId::Star => "star",
            IndicatorId::OpenPr => "openPR",
            IndicatorId::ClosePr => "closePR",
            IndicatorId::OpenIssue => "openISSUE",
            IndicatorId::ClosedIssue => "closedISSUE",
        }
    }

    /// Case-insensitive lookup by indicator name.
    pub fn from_name(name: &str) -> Option<IndicatorId> {
        IndicatorId::ALL
            .into_iter()
            .find(|i| i.name().eq_ignore_ascii_case(name))
    }

    /// The input columns for this target, in canonical order.
    pub fn input_features(self) -> [Feature; INPUT_COUNT] {
        let target = self.column();
        let mut out = [Feature::Commits; INPUT_COUNT];
        let mut k = 0;
        for f in Feature::ALL {
            if f != target {
                out[k] = f;
                k += 1;
            }
        }
        out
    }
}

impl fmt::Display for IndicatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A calendar month, formatted `YYYY-MM`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Option<YearMonth> {
        if (1..=12).contains(&month) && (0..=9999).contains(&year) {
            Some(YearMonth {
                year,
                month: month as u8,
            })
        } else {
            None
        }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month as u32
    }

    pub fn succ(self) -> YearMonth {
        if self.month == 12 {
            YearMonth {
                year: self.year + 1,
                month: 1,
            }
        } else {
            YearMonth {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    /// Signed number of months from `self` to `later`.
    pub fn months_until(self, later: YearMonth) -> i64 {
        (later.year as i64 - self.year as i64) * 12 + (later.month as i64 - self.month as i64)
    }

    /// The month `n` months after `self`.
    pub fn plus(self, n: u32) -> YearMonth {
        let total = self.year as i64 * 12 + (self.month as i64 - 1) + n as i64;
        YearMonth {
            year: (total / 12) as i32,
            month: (total % 12 + 1) as u8,
        }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DataError::Parse(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month).ok_or_else(bad)
    }
}

#[cfg(feature = "serde")]
impl Serialize for YearMonth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <String as Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One project-month of activity counts.
///
/// Counts are stored signed so that malformed input survives loading and can
/// be reported by [`validate_series`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonthlyRecord {
    pub month_index: u32,
    pub calendar_month: YearMonth,
    pub counts: [i64; FEATURE_COUNT],
}

impl MonthlyRecord {
    pub fn zero(month_index: u32, calendar_month: YearMonth) -> MonthlyRecord {
        MonthlyRecord {
            month_index,
            calendar_month,
            counts: [0; FEATURE_COUNT],
        }
    }

    pub fn get(&self, feature: Feature) -> i64 {
        self.counts[feature.index()]
    }

    pub fn set(&mut self, feature: Feature, value: i64) {
        self.counts[feature.index()] = value;
    }

    /// The eleven non-target counts, in canonical order.
    pub fn inputs(&self, target: IndicatorId) -> Vec<f64> {
        target
            .input_features()
            .iter()
            .map(|&f| self.get(f) as f64)
            .collect()
    }
}

/// Ordered monthly records of one repository.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectSeries {
    pub project_id: String,
    pub start_month: YearMonth,
    pub records: Vec<MonthlyRecord>,
}

impl ProjectSeries {
    /// Number of months `N`.
    pub fn len(&self) -> u32 {
        self.records.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, month_index: u32) -> Option<&MonthlyRecord> {
        let pos = month_index.checked_sub(1)? as usize;
        match self.records.get(pos) {
            Some(r) if r.month_index == month_index => Some(r),
            _ => self.records.iter().find(|r| r.month_index == month_index),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Finding {
    TooShort { months: usize },
    StartMismatch { start: YearMonth, first: YearMonth },
    MonthGap { expected: u32, found: u32 },
    CalendarOrder { month_index: u32 },
    NegativeFeature { month_index: u32, feature: Feature, value: i64 },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::TooShort { months } => {
                write!(f, "series too short: {months} months, need at least {MIN_TRAIN_MONTHS}")
            }
            Finding::StartMismatch { start, first } => {
                write!(f, "start month {start} differs from first record {first}")
            }
            Finding::MonthGap { expected, found } => {
                write!(f, "gap at index {expected} (next record is {found})")
            }
            Finding::CalendarOrder { month_index } => {
                write!(f, "calendar month not increasing at index {month_index}")
            }
            Finding::NegativeFeature {
                month_index,
                feature,
                value,
            } => write!(f, "negative feature {feature}={value} at index {month_index}"),
        }
    }
}

/// All invariant violations of a series; empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }
}

pub fn validate_series(series: &ProjectSeries) -> ValidationReport {
    let mut findings = Vec::new();
    if series.records.len() < MIN_TRAIN_MONTHS as usize {
        findings.push(Finding::TooShort {
            months: series.records.len(),
        });
    }
    if let Some(first) = series.records.first() {
        if first.calendar_month != series.start_month {
            findings.push(Finding::StartMismatch {
                start: series.start_month,
                first: first.calendar_month,
            });
        }
    }
    let mut prev: Option<&MonthlyRecord> = None;
    for rec in &series.records {
        let expected = prev.map_or(1, |p| p.month_index + 1);
        if rec.month_index != expected {
            findings.push(Finding::MonthGap {
                expected,
                found: rec.month_index,
            });
        }
        if let Some(p) = prev {
            if rec.calendar_month <= p.calendar_month {
                findings.push(Finding::CalendarOrder {
                    month_index: rec.month_index,
                });
            }
        }
        for f in Feature::ALL {
            let value = rec.get(f);
            if value < 0 {
                findings.push(Finding::NegativeFeature {
                    month_index: rec.month_index,
                    feature: f,
                    value,
                });
            }
        }
        prev = Some(rec);
    }
    ValidationReport { findings }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("month range {first}..={last} outside series of {months} months")]
    Range { first: u32, last: u32, months: u32 },
    #[error("insufficient data: {reason}")]
    InsufficientData { reason: String },
    #[error("month {0} missing from series")]
    MissingMonth(u32),
    #[error("table shape mismatch: {0}")]
    Shape(String),
    #[error("cannot parse {0:?}")]
    Parse(String),
}

/// Rows of (inputs, target) for one indicator.
#[derive(Clone, Debug, PartialEq)]
pub struct SupervisedTable {
    target: IndicatorId,
    feature_names: Vec<String>,
    month_indices: Vec<u32>,
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl SupervisedTable {
    /// Builds a table from raw columns. Month indices are numbered 1..=n.
    pub fn from_rows(
        target: IndicatorId,
        feature_names: Vec<String>,
        features: Vec<Vec<f64>>,
        targets: Vec<f64>,
    ) -> Result<SupervisedTable, DataError> {
        if features.len() != targets.len() {
            return Err(DataError::Shape(alloc::format!(
                "{} feature rows but {} targets",
                features.len(),
                targets.len()
            )));
        }
        if let Some(bad) = features.iter().find(|r| r.len() != feature_names.len()) {
            return Err(DataError::Shape(alloc::format!(
                "row of width {} with {} feature names",
                bad.len(),
                feature_names.len()
            )));
        }
        let month_indices = (1..=features.len() as u32).collect();
        Ok(SupervisedTable {
            target,
            feature_names,
            month_indices,
            features,
            targets,
        })
    }

    pub fn target(&self) -> IndicatorId {
        self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn month_indices(&self) -> &[u32] {
        &self.month_indices
    }

    /// The first `n` rows.
    pub fn head(&self, n: usize) -> SupervisedTable {
        let n = n.min(self.len());
        SupervisedTable {
            target: self.target,
            feature_names: self.feature_names.clone(),
            month_indices: self.month_indices[..n].to_vec(),
            features: self.features[..n].to_vec(),
            targets: self.targets[..n].to_vec(),
        }
    }
}

/// The held-out month of a split.
#[derive(Clone, Debug, PartialEq)]
pub struct TestPoint {
    pub month_index: u32,
    pub features: Vec<f64>,
    pub actual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HorizonSplit {
    /// Months between the last training month and the test month.
    pub horizon: u32,
    pub train: SupervisedTable,
    pub test: TestPoint,
}

pub fn to_supervised(
    series: &ProjectSeries,
    target: IndicatorId,
    first: u32,
    last: u32,
) -> Result<SupervisedTable, DataError> {
    let months = series.len();
    if first < 1 || first > last || last > months {
        return Err(DataError::Range {
            first,
            last,
            months,
        });
    }
    let column = target.column();
    let n = (last - first + 1) as usize;
    let mut features = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    let mut month_indices = Vec::with_capacity(n);
    for m in first..=last {
        let rec = series.record(m).ok_or(DataError::MissingMonth(m))?;
        features.push(rec.inputs(target));
        targets.push(rec.get(column) as f64);
        month_indices.push(m);
    }
    Ok(SupervisedTable {
        target,
        feature_names: target
            .input_features()
            .iter()
            .map(|f| f.name().to_string())
            .collect(),
        month_indices,
        features,
        targets,
    })
}

fn test_point(
    series: &ProjectSeries,
    target: IndicatorId,
    month: u32,
) -> Result<TestPoint, DataError> {
    let rec = series.record(month).ok_or(DataError::MissingMonth(month))?;
    Ok(TestPoint {
        month_index: month,
        features: rec.inputs(target),
        actual: rec.get(target.column()) as f64,
    })
}

/// Train on months `1..=N-horizon`, test on month `N`.
pub fn split_horizon(
    series: &ProjectSeries,
    target: IndicatorId,
    horizon: u32,
) -> Result<HorizonSplit, DataError> {
    let months = series.len();
    if horizon == 0 {
        return Err(DataError::InsufficientData {
            reason: "horizon must be at least one month".to_string(),
        });
    }
    let last_train = months.saturating_sub(horizon);
    if last_train < MIN_TRAIN_MONTHS {
        return Err(DataError::InsufficientData {
            reason: alloc::format!(
                "{months} months leave {last_train} training months at horizon {horizon}, need {MIN_TRAIN_MONTHS}"
            ),
        });
    }
    Ok(HorizonSplit {
        horizon,
        train: to_supervised(series, target, 1, last_train)?,
        test: test_point(series, target, months)?,
    })
}

/// Train on months `1..=floor(N/2)`, test on month `floor(N/2)+12`.
pub fn split_midway(series: &ProjectSeries, target: IndicatorId) -> Result<HorizonSplit, DataError> {
    let months = series.len();
    if months < MIDWAY_MIN_MONTHS {
        return Err(DataError::InsufficientData {
            reason: alloc::format!(
                "{months} months, mid-project protocol needs at least {MIDWAY_MIN_MONTHS}"
            ),
        });
    }
    let last_train = months / 2;
    Ok(HorizonSplit {
        horizon: MIDWAY_LEAD,
        train: to_supervised(series, target, 1, last_train)?,
        test: test_point(series, target, last_train + MIDWAY_LEAD)?,
    })
}
