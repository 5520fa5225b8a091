//! Raw timestamped activity for one repository.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub type Timestamp = DateTime<Utc>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CommitEvent {
    pub at: Timestamp,
    pub author: String,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrAction {
    Opened,
    /// Any close, including the one accompanying a merge.
    Closed,
    Merged { by: String },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrEvent {
    pub at: Timestamp,
    pub number: u64,
    #[serde(flatten)]
    pub action: PrAction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueAction {
    Opened,
    Closed,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IssueEvent {
    pub at: Timestamp,
    pub number: u64,
    pub action: IssueAction,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventStream {
    #[serde(default)]
    pub commits: Vec<CommitEvent>,
    #[serde(default)]
    pub pull_requests: Vec<PrEvent>,
    #[serde(default)]
    pub issues: Vec<IssueEvent>,
    #[serde(default)]
    pub pr_comments: Vec<Timestamp>,
    #[serde(default)]
    pub issue_comments: Vec<Timestamp>,
    #[serde(default)]
    pub stars: Vec<Timestamp>,
    #[serde(default)]
    pub forks: Vec<Timestamp>,
}

impl EventStream {
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn len(&self) -> usize {
        self.commits.len()
            + self.pull_requests.len()
            + self.issues.len()
            + self.pr_comments.len()
            + self.issue_comments.len()
            + self.stars.len()
            + self.forks.len()
    }

    /// Orders every list by timestamp (ties by the remaining fields).
    pub fn sort(&mut self) {
        self.commits.sort();
        self.pull_requests.sort();
        self.issues.sort();
        self.pr_comments.sort();
        self.issue_comments.sort();
        self.stars.sort();
        self.forks.sort();
    }

    pub fn latest(&self) -> Option<Timestamp> {
        let stamps = self
            .commits
            .iter()
            .map(|c| c.at)
            .chain(self.pull_requests.iter().map(|p| p.at))
            .chain(self.issues.iter().map(|i| i.at))
            .chain(self.pr_comments.iter().copied())
            .chain(self.issue_comments.iter().copied())
            .chain(self.stars.iter().copied())
            .chain(self.forks.iter().copied());
        stamps.max()
    }
}
