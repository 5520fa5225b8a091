//! Fetching a repository's activity: API listings for PRs, issues,
//! comments, stars and forks; commits from a local bare clone.
//!
//! Every successful API response is stored verbatim under the cache
//! directory, one file per request, so later runs can replay offline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use chrono::{DateTime, NaiveDate, Utc};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::events::{CommitEvent, EventStream, IssueAction, IssueEvent, PrAction, PrEvent, Timestamp};
use super::filters::RepoMeta;

pub const TOKEN_ENV: &str = "HEALTH_TOKEN";
pub const PAGE_SIZE: usize = 100;
pub const DEFAULT_API_BASE: &str = "https://api.github.com";
pub const DEFAULT_CLONE_BASE: &str = "https://github.com";
const JSON: &str = "application/vnd.github+json";
const STAR_JSON: &str = "application/vnd.github.star+json";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MineError {
    #[error("rate limit exhausted; retry after {reset}")]
    RateLimited { reset: DateTime<Utc> },
    #[error("credentials rejected for {url}")]
    Credential { url: String },
    #[error("fetch failed for {url}: {reason}")]
    Fetch { url: String, reason: String },
    #[error("offline and not cached: {url}")]
    NotCached { url: String },
    #[error("clone of {url} failed: {reason}")]
    Clone { url: String, reason: String },
    #[error("unexpected response from {url}: {reason}")]
    Malformed { url: String, reason: String },
    #[error("not a repository reference: {0:?}")]
    BadRepo(String),
}

impl MineError {
    pub fn is_network(&self) -> bool {
        !matches!(self, MineError::Malformed { .. } | MineError::BadRepo(_))
    }
}

/// An API token. Never printed.
#[derive(Clone)]
pub struct Token(String);

impl Token {
    pub fn new(secret: impl Into<String>) -> Token {
        Token(secret.into())
    }

    pub fn from_env(var: &str) -> Option<Token> {
        std::env::var(var).ok().filter(|t| !t.is_empty()).map(Token)
    }

    fn secret(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Token(<redacted>)")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub rate_remaining: Option<u64>,
    /// Epoch seconds at which the rate window resets.
    pub rate_reset: Option<i64>,
    pub body: String,
}

pub trait Transport: Sync {
    fn get(&self, url: &str, accept: &str, token: Option<&Token>) -> Result<HttpResponse, MineError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl Default for UreqTransport {
    fn default() -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .user_agent("healthcast")
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str, accept: &str, token: Option<&Token>) -> Result<HttpResponse, MineError> {
        let fetch_err = |e: ureq::Error| MineError::Fetch {
            url: url.to_string(),
            reason: e.to_string(),
        };
        let mut req = self.agent.get(url).header("Accept", accept);
        if let Some(t) = token {
            req = req.header("Authorization", &format!("Bearer {}", t.secret()));
        }
        let mut resp = req.call().map_err(fetch_err)?;
        let header = |name: &str| {
            resp.headers()
                .get(name)
                .and_then(|v| v.to_str().ok())
                .map(str::to_string)
        };
        let rate_remaining = header("x-ratelimit-remaining").and_then(|v| v.parse().ok());
        let rate_reset = header("x-ratelimit-reset").and_then(|v| v.parse().ok());
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(fetch_err)?;
        Ok(HttpResponse {
            status,
            rate_remaining,
            rate_reset,
            body,
        })
    }
}

/// Verbatim response bodies keyed by a hash of the request.
#[derive(Clone, Debug)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> ResponseCache {
        ResponseCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, url: &str, accept: &str) -> PathBuf {
        let digest = Sha256::digest(format!("{url}\n{accept}").as_bytes());
        self.dir.join("api").join(format!("{}.json", hex::encode(digest)))
    }

    pub fn load(&self, url: &str, accept: &str) -> Option<String> {
        fs::read_to_string(self.path_for(url, accept)).ok()
    }

    pub fn store(&self, url: &str, accept: &str, body: &str) -> std::io::Result<()> {
        let path = self.path_for(url, accept);
        fs::create_dir_all(path.parent().expect("cache path has a parent"))?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, body)?;
        fs::rename(tmp, path)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RepoId {
    pub owner: String,
    pub name: String,
}

impl RepoId {
    /// Accepts `owner/name` or a `https://github.com/owner/name[.git]` URL.
    pub fn parse(s: &str) -> Result<RepoId, MineError> {
        let trimmed = s.trim().trim_end_matches('/').trim_end_matches(".git");
        let path = trimmed
            .split_once("://")
            .map(|(_, rest)| rest.split_once('/').map_or("", |(_, p)| p))
            .unwrap_or(trimmed);
        let parts: Vec<&str> = path.split('/').filter(|p| !p.is_empty()).collect();
        match parts.as_slice() {
            [owner, name] => Ok(RepoId {
                owner: owner.to_string(),
                name: name.to_string(),
            }),
            _ => Err(MineError::BadRepo(s.to_string())),
        }
    }

    /// `owner/name`, also used as the project id.
    pub fn slug(&self) -> String {
        format!("{}/{}", self.owner, self.name)
    }

    pub fn url(&self) -> String {
        format!("{DEFAULT_CLONE_BASE}/{}", self.slug())
    }
}

impl fmt::Display for RepoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.owner, self.name)
    }
}

/// Everything fetched for one repository.
#[derive(Clone, Debug, PartialEq)]
pub struct MinedRepo {
    pub repo: RepoId,
    pub events: EventStream,
    /// The repository resource, as returned by the API.
    pub info: Value,
    pub contributor_count: u64,
}

pub struct Miner<T> {
    transport: T,
    token: Option<Token>,
    cache: ResponseCache,
    offline: bool,
    api_base: String,
    clone_base: String,
}

impl<T: Transport> Miner<T> {
    pub fn new(transport: T, token: Option<Token>, cache_dir: impl Into<PathBuf>) -> Miner<T> {
        Miner {
            transport,
            token,
            cache: ResponseCache::new(cache_dir),
            offline: false,
            api_base: DEFAULT_API_BASE.to_string(),
            clone_base: DEFAULT_CLONE_BASE.to_string(),
        }
    }

    /// Serve only from the cache and existing clones.
    pub fn offline(mut self, offline: bool) -> Self {
        self.offline = offline;
        self
    }

    pub fn api_base(mut self, base: impl Into<String>) -> Self {
        self.api_base = base.into().trim_end_matches('/').to_string();
        self
    }

    /// Prefix for clone URLs; `{base}/{owner}/{name}.git` is cloned.
    pub fn clone_base(mut self, base: impl Into<String>) -> Self {
        self.clone_base = base.into().trim_end_matches('/').to_string();
        self
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    fn fetch(&self, url: &str, accept: &str) -> Result<String, MineError> {
        if let Some(body) = self.cache.load(url, accept) {
            log::debug!("cache hit {url}");
            return Ok(body);
        }
        if self.offline {
            return Err(MineError::NotCached {
                url: url.to_string(),
            });
        }
        log::debug!("GET {url}");
        let resp = self.transport.get(url, accept, self.token.as_ref())?;
        match resp.status {
            200 => {
                self.cache
                    .store(url, accept, &resp.body)
                    .map_err(|e| MineError::Fetch {
                        url: url.to_string(),
                        reason: format!("cache write: {e}"),
                    })?;
                Ok(resp.body)
            }
            401 => Err(MineError::Credential {
                url: url.to_string(),
            }),
            403 | 429 if resp.status == 429 || resp.rate_remaining == Some(0) => {
                let reset = resp
                    .rate_reset
                    .and_then(|s| DateTime::from_timestamp(s, 0))
                    .unwrap_or(DateTime::UNIX_EPOCH);
                Err(MineError::RateLimited { reset })
            }
            status => Err(MineError::Fetch {
                url: url.to_string(),
                reason: format!("HTTP {status}"),
            }),
        }
    }

    fn fetch_json(&self, url: &str, accept: &str) -> Result<Value, MineError> {
        let body = self.fetch(url, accept)?;
        serde_json::from_str(&body).map_err(|e| MineError::Malformed {
            url: url.to_string(),
            reason: e.to_string(),
        })
    }

    /// All pages of a list endpoint under `repos/{owner}/{name}/`.
    fn fetch_all(&self, repo: &RepoId, path: &str, accept: &str) -> Result<Vec<Value>, MineError> {
        let sep = if path.contains('?') { '&' } else { '?' };
        let mut items = Vec::new();
        for page in 1.. {
            let url = format!(
                "{}/repos/{}/{path}{sep}per_page={PAGE_SIZE}&page={page}",
                self.api_base,
                repo.slug()
            );
            let batch = match self.fetch_json(&url, accept)? {
                Value::Array(batch) => batch,
                _ => {
                    return Err(MineError::Malformed {
                        url,
                        reason: "expected a JSON array".into(),
                    })
                }
            };
            let n = batch.len();
            items.extend(batch);
            if n < PAGE_SIZE {
                break;
            }
        }
        Ok(items)
    }

    pub fn clone_url(&self, repo: &RepoId) -> String {
        format!("{}/{}.git", self.clone_base, repo.slug())
    }

    /// Commit history of the default branch, from a bare clone kept in
    /// the cache directory.
    pub fn clone_commits(&self, repo: &RepoId) -> Result<Vec<CommitEvent>, MineError> {
        let url = self.clone_url(repo);
        let clone_err = |reason: String| MineError::Clone {
            url: url.clone(),
            reason,
        };
        let dir = self
            .cache
            .dir()
            .join("clones")
            .join(format!("{}__{}.git", repo.owner, repo.name));
        if !dir.exists() {
            if self.offline {
                return Err(clone_err("offline and no local clone".into()));
            }
            fs::create_dir_all(dir.parent().unwrap()).map_err(|e| clone_err(e.to_string()))?;
            let out = Command::new("git")
                .args(["clone", "--bare", "--quiet", &url])
                .arg(&dir)
                .env("GIT_TERMINAL_PROMPT", "0")
                .output()
                .map_err(|e| clone_err(e.to_string()))?;
            if !out.status.success() {
                let _ = fs::remove_dir_all(&dir);
                return Err(clone_err(String::from_utf8_lossy(&out.stderr).trim().to_string()));
            }
        }
        let out = Command::new("git")
            .arg("--git-dir")
            .arg(&dir)
            .args(["log", "--format=%H%x09%at%x09%ae", "HEAD"])
            .output()
            .map_err(|e| clone_err(e.to_string()))?;
        if !out.status.success() {
            return Err(clone_err(String::from_utf8_lossy(&out.stderr).trim().to_string()));
        }
        parse_git_log(&String::from_utf8_lossy(&out.stdout)).map_err(clone_err)
    }

    pub fn mine(&self, repo_url: &str) -> Result<MinedRepo, MineError> {
        let repo = RepoId::parse(repo_url)?;
        let info_url = format!("{}/repos/{}", self.api_base, repo.slug());
        let info = self.fetch_json(&info_url, JSON)?;

        let pulls = self.fetch_all(&repo, "pulls?state=all&sort=created&direction=asc", JSON)?;
        let issues = self.fetch_all(&repo, "issues?state=all&sort=created&direction=asc", JSON)?;
        let comments = self.fetch_all(&repo, "issues/comments?sort=created&direction=asc", JSON)?;
        let review_comments = self.fetch_all(&repo, "pulls/comments?sort=created&direction=asc", JSON)?;
        let issue_events = self.fetch_all(&repo, "issues/events", JSON)?;
        let stargazers = self.fetch_all(&repo, "stargazers", STAR_JSON)?;
        let forks = self.fetch_all(&repo, "forks?sort=oldest", JSON)?;
        let contributors = self.fetch_all(&repo, "contributors?anon=1", JSON)?;

        let mut events = EventStream {
            commits: self.clone_commits(&repo)?,
            ..EventStream::default()
        };
        let bad = |what: &str| MineError::Malformed {
            url: info_url.clone(),
            reason: format!("missing or invalid {what}"),
        };

        let mut merged_by: BTreeMap<u64, String> = BTreeMap::new();
        for e in &issue_events {
            if e["event"] == "merged" {
                if let (Some(n), Some(login)) = (e["issue"]["number"].as_u64(), e["actor"]["login"].as_str()) {
                    merged_by.entry(n).or_insert_with(|| login.to_string());
                }
            }
        }
        let mut pr_numbers = BTreeSet::new();
        for p in &pulls {
            let number = p["number"].as_u64().ok_or_else(|| bad("pull number"))?;
            pr_numbers.insert(number);
            let mut push = |at: Timestamp, action| {
                events.pull_requests.push(PrEvent { at, number, action })
            };
            push(timestamp(&p["created_at"]).ok_or_else(|| bad("created_at"))?, PrAction::Opened);
            if let Some(at) = timestamp(&p["closed_at"]) {
                push(at, PrAction::Closed);
            }
            if let Some(at) = timestamp(&p["merged_at"]) {
                let by = match merged_by.get(&number) {
                    Some(login) => login.clone(),
                    None => self.merger_of(&repo, number)?,
                };
                push(at, PrAction::Merged { by });
            }
        }
        for i in issues.iter().filter(|i| i.get("pull_request").is_none()) {
            let number = i["number"].as_u64().ok_or_else(|| bad("issue number"))?;
            let opened = timestamp(&i["created_at"]).ok_or_else(|| bad("created_at"))?;
            events.issues.push(IssueEvent {
                at: opened,
                number,
                action: IssueAction::Opened,
            });
            if let Some(at) = timestamp(&i["closed_at"]) {
                events.issues.push(IssueEvent {
                    at,
                    number,
                    action: IssueAction::Closed,
                });
            }
        }
        for c in &comments {
            let at = timestamp(&c["created_at"]).ok_or_else(|| bad("comment created_at"))?;
            let number = c["issue_url"]
                .as_str()
                .and_then(|u| u.rsplit('/').next())
                .and_then(|n| n.parse::<u64>().ok());
            if number.is_some_and(|n| pr_numbers.contains(&n)) {
                events.pr_comments.push(at);
            } else {
                events.issue_comments.push(at);
            }
        }
        for c in &review_comments {
            events
                .pr_comments
                .push(timestamp(&c["created_at"]).ok_or_else(|| bad("review comment created_at"))?);
        }
        for s in &stargazers {
            events
                .stars
                .push(timestamp(&s["starred_at"]).ok_or_else(|| bad("starred_at"))?);
        }
        for f in &forks {
            events
                .forks
                .push(timestamp(&f["created_at"]).ok_or_else(|| bad("fork created_at"))?);
        }
        events.sort();
        Ok(MinedRepo {
            repo,
            events,
            info,
            contributor_count: contributors.len() as u64,
        })
    }

    fn merger_of(&self, repo: &RepoId, number: u64) -> Result<String, MineError> {
        let url = format!("{}/repos/{}/pulls/{number}", self.api_base, repo.slug());
        let pr = self.fetch_json(&url, JSON)?;
        Ok(pr["merged_by"]["login"].as_str().unwrap_or("unknown").to_string())
    }
}

fn timestamp(v: &Value) -> Option<Timestamp> {
    v.as_str()?.parse().ok()
}

/// Parses `hash<TAB>epoch<TAB>email` lines.
pub fn parse_git_log(text: &str) -> Result<Vec<CommitEvent>, String> {
    let mut commits = Vec::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let mut parts = line.splitn(3, '\t');
        let (_hash, secs, author) = (parts.next(), parts.next(), parts.next());
        let at = secs
            .and_then(|s| s.parse::<i64>().ok())
            .and_then(|s| DateTime::from_timestamp(s, 0))
            .ok_or_else(|| format!("bad log line {line:?}"))?;
        commits.push(CommitEvent {
            at,
            author: author.unwrap_or_default().to_string(),
        });
    }
    commits.sort();
    Ok(commits)
}

/// Selection metadata from the repository resource and the mined history.
/// The `recent_*` counts cover the 30 days up to `reference_date`.
pub fn derive_meta(mined: &MinedRepo, reference_date: NaiveDate) -> Result<RepoMeta, MineError> {
    let info = &mined.info;
    let bad = |what: &str| MineError::Malformed {
        url: mined.repo.url(),
        reason: format!("repository field {what}"),
    };
    let count = |key: &str| info[key].as_u64().ok_or_else(|| bad(key));
    let created: Timestamp = timestamp(&info["created_at"]).ok_or_else(|| bad("created_at"))?;
    let end = reference_date
        .succ_opt()
        .expect("date in range")
        .and_hms_opt(0, 0, 0)
        .unwrap()
        .and_utc();
    let begin = end - chrono::Duration::days(30);
    let recent = |t: &Timestamp| *t >= begin && *t < end;
    let ev = &mined.events;
    Ok(RepoMeta {
        url: mined.repo.url(),
        is_public: !info["private"].as_bool().unwrap_or(false),
        is_archived: info["archived"].as_bool().unwrap_or(false),
        is_mirror: !info["mirror_url"].is_null(),
        stars: count("stargazers_count")?,
        size_kb: count("size")?,
        forks: count("forks_count")?,
        created_date: created.date_naive(),
        contributor_count: mined.contributor_count,
        total_commits: ev.commits.len() as u64,
        total_issues_closed: ev
            .issues
            .iter()
            .filter(|i| i.action == IssueAction::Closed)
            .count() as u64,
        total_prs_closed: ev
            .pull_requests
            .iter()
            .filter(|p| p.action == PrAction::Closed)
            .count() as u64,
        recent_prs_30d: ev
            .pull_requests
            .iter()
            .filter(|p| p.action == PrAction::Opened && recent(&p.at))
            .count() as u64,
        recent_commits_30d: ev.commits.iter().filter(|c| recent(&c.at)).count() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repo_references() {
        let want = RepoId {
            owner: "acme".into(),
            name: "widget".into(),
        };
        assert_eq!(RepoId::parse("acme/widget").unwrap(), want);
        assert_eq!(RepoId::parse("https://github.com/acme/widget.git").unwrap(), want);
        assert_eq!(RepoId::parse("https://github.com/acme/widget/").unwrap(), want);
        assert!(RepoId::parse("acme").is_err());
        assert!(RepoId::parse("https://github.com/a/b/c").is_err());
    }

    #[test]
    fn token_is_redacted() {
        let t = Token::new("ghp_secret");
        assert!(!format!("{t:?}").contains("secret"));
    }

    #[test]
    fn cache_keys_depend_on_accept() {
        let c = ResponseCache::new("/tmp/x");
        assert_ne!(c.path_for("u", "a"), c.path_for("u", "b"));
        assert_eq!(c.path_for("u", "a"), c.path_for("u", "a"));
    }

    #[test]
    fn git_log_lines() {
        let log = "abc\t1462060800\ta@x.org\ndef\t1462147200\tb@x.org\n";
        let commits = parse_git_log(log).unwrap();
        assert_eq!(commits.len(), 2);
        assert_eq!(commits[0].at.to_rfc3339(), "2016-05-01T00:00:00+00:00");
        assert!(parse_git_log("abc\tnope\tx").is_err());
    }
}
