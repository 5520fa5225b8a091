//! Repository selection: metadata thresholds and the irrelevant-word list.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoMeta {
    pub url: String,
    pub is_public: bool,
    pub is_archived: bool,
    pub is_mirror: bool,
    pub stars: u64,
    pub size_kb: u64,
    pub forks: u64,
    pub created_date: NaiveDate,
    pub contributor_count: u64,
    pub total_commits: u64,
    pub total_issues_closed: u64,
    pub total_prs_closed: u64,
    /// PRs opened in the 30 days before the reference date.
    pub recent_prs_30d: u64,
    /// Commits in the 30 days before the reference date.
    pub recent_commits_30d: u64,
}

pub const MIN_STARS: u64 = 1000;
pub const MAX_STARS: u64 = 20_000;
pub const MIN_SIZE_KB: u64 = 10_000;
pub const MIN_FORKS: u64 = 10;
pub const MIN_CONTRIBUTORS: u64 = 3;
pub const MIN_TOTAL_COMMITS: u64 = 1000;
pub const MIN_ISSUES_CLOSED: u64 = 50;
pub const MIN_PRS_CLOSED: u64 = 50;
pub const MIN_RECENT_PRS: u64 = 1;
pub const MIN_RECENT_COMMITS: u64 = 1;

pub fn created_window() -> (NaiveDate, NaiveDate) {
    (
        NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2016, 12, 31).unwrap(),
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FilterDecision {
    pub accepted: bool,
    /// Names of the failed predicates, in checking order.
    pub failed: Vec<&'static str>,
}

pub fn passes_filters(meta: &RepoMeta) -> FilterDecision {
    let (created_lo, created_hi) = created_window();
    let checks: [(&'static str, bool); 13] = [
        ("public", meta.is_public),
        ("archived", !meta.is_archived),
        ("mirror", !meta.is_mirror),
        ("stars", (MIN_STARS..=MAX_STARS).contains(&meta.stars)),
        ("size", meta.size_kb >= MIN_SIZE_KB),
        ("forks", meta.forks >= MIN_FORKS),
        (
            "created",
            (created_lo..=created_hi).contains(&meta.created_date),
        ),
        ("contributors", meta.contributor_count >= MIN_CONTRIBUTORS),
        ("total_commits", meta.total_commits >= MIN_TOTAL_COMMITS),
        (
            "total_issues_closed",
            meta.total_issues_closed >= MIN_ISSUES_CLOSED,
        ),
        ("total_prs_closed", meta.total_prs_closed >= MIN_PRS_CLOSED),
        ("recent_prs", meta.recent_prs_30d >= MIN_RECENT_PRS),
        ("recent_commits", meta.recent_commits_30d >= MIN_RECENT_COMMITS),
    ];
    let failed: Vec<&'static str> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| *name)
        .collect();
    FilterDecision {
        accepted: failed.is_empty(),
        failed,
    }
}

/// Words whose presence in a URL marks a repository as non-software
/// (tutorials, course material, personal notes and the like).
pub const IRRELEVANT_WORDS: [&str; 49] = [
    "template", "web", "tutorial", "lecture", "sample", "note", "sheet", "book", "doc", "image",
    "video", "demo", "conf", "intro", "class", "exam", "study", "material", "test", "exercise",
    "resource", "article", "academic", "result", "output", "resume", "cv", "guide", "present",
    "slide", "101", "qa", "view", "form", "course", "org", "collect", "pdf", "learn", "blog",
    "lesson", "pic", "paper", "camp", "summit", "work", "wiki", "thesis", "lang",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeywordDictionary {
    words: BTreeSet<String>,
}

impl Default for KeywordDictionary {
    fn default() -> Self {
        KeywordDictionary::new(IRRELEVANT_WORDS)
    }
}

impl KeywordDictionary {
    pub fn new<I, S>(words: I) -> KeywordDictionary
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        KeywordDictionary {
            words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// First dictionary word found in `url`, case-insensitively.
    pub fn matching_word(&self, url: &str) -> Option<&str> {
        let lower = url.to_lowercase();
        self.words().find(|w| lower.contains(w))
    }
}

/// False when the URL contains any dictionary word as a raw substring.
pub fn is_relevant_url(url: &str, dict: &KeywordDictionary) -> bool {
    dict.matching_word(url).is_none()
}
