//! Bucketing raw events into monthly records.

use std::collections::{BTreeMap, BTreeSet};

use chrono::Datelike;
use healthcast_core::data::{Feature, MonthlyRecord, ProjectSeries, YearMonth};

use super::events::{EventStream, IssueAction, PrAction, Timestamp};
use crate::error::Error;

fn month_of(t: &Timestamp) -> YearMonth {
    YearMonth::new(t.year(), t.month()).expect("chrono months are valid")
}

/// One record per UTC calendar month from the first commit through the
/// latest event. Events dated before the first commit count towards the
/// first month.
pub fn aggregate_monthly(events: &EventStream, project_id: &str) -> Result<ProjectSeries, Error> {
    if events.is_empty() {
        return Err(Error::data(format!("{project_id}: no events")));
    }
    let first_commit = events
        .commits
        .iter()
        .map(|c| c.at)
        .min()
        .ok_or_else(|| Error::data(format!("{project_id}: no commits to anchor the series")))?;
    let start = month_of(&first_commit);
    let end = month_of(&events.latest().expect("stream is non-empty"));
    let months = start.months_until(end) as u32 + 1;

    let slot = |t: &Timestamp| start.months_until(month_of(t)).max(0) as usize;
    let mut counts = vec![[0i64; 12]; months as usize];
    let mut bump = |t: &Timestamp, f: Feature| counts[slot(t)][f.index()] += 1;

    let mut authors: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
    for c in &events.commits {
        bump(&c.at, Feature::Commits);
        authors.entry(slot(&c.at)).or_default().insert(&c.author);
    }
    let mut mergers: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
    for p in &events.pull_requests {
        match &p.action {
            PrAction::Opened => bump(&p.at, Feature::OpenPrs),
            PrAction::Closed => bump(&p.at, Feature::ClosedPrs),
            PrAction::Merged { by } => {
                bump(&p.at, Feature::MergedPrs);
                mergers.entry(slot(&p.at)).or_default().insert(by);
            }
        }
    }
    for i in &events.issues {
        match i.action {
            IssueAction::Opened => bump(&i.at, Feature::OpenIssues),
            IssueAction::Closed => bump(&i.at, Feature::ClosedIssues),
        }
    }
    for t in &events.pr_comments {
        bump(t, Feature::PrComments);
    }
    for t in &events.issue_comments {
        bump(t, Feature::IssueComments);
    }
    for t in &events.stars {
        bump(t, Feature::Stars);
    }
    for t in &events.forks {
        bump(t, Feature::Forks);
    }
    for (m, set) in authors {
        counts[m][Feature::Contributors.index()] = set.len() as i64;
    }
    for (m, set) in mergers {
        counts[m][Feature::PrMergers.index()] = set.len() as i64;
    }

    let records = counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| MonthlyRecord {
            month_index: i as u32 + 1,
            calendar_month: start.plus(i as u32),
            counts: c,
        })
        .collect();
    Ok(ProjectSeries {
        project_id: project_id.to_string(),
        start_month: start,
        records,
    })
}
