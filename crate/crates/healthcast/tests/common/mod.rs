#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Mutex;

use chrono::NaiveDate;
use healthcast::ingest::{HttpResponse, MineError, RepoMeta, Token, Transport, PAGE_SIZE};
use serde_json::{json, Value};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn passing_meta() -> RepoMeta {
    RepoMeta {
        url: "https://github.com/acme/fastjson".into(),
        is_public: true,
        is_archived: false,
        is_mirror: false,
        stars: 5000,
        size_kb: 25_000,
        forks: 120,
        created_date: NaiveDate::from_ymd_opt(2015, 6, 1).unwrap(),
        contributor_count: 12,
        total_commits: 3000,
        total_issues_closed: 400,
        total_prs_closed: 300,
        recent_prs_30d: 4,
        recent_commits_30d: 20,
    }
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// Metadata cases with the filters each must fail (empty = accepted).
pub fn filter_cases() -> Vec<(&'static str, RepoMeta, Vec<&'static str>)> {
    let base = passing_meta;
    vec![
        ("all pass", base(), vec![]),
        ("stars below range", RepoMeta { stars: 500, ..base() }, vec!["stars"]),
        ("stars at lower bound", RepoMeta { stars: 1000, ..base() }, vec![]),
        ("stars at upper bound", RepoMeta { stars: 20_000, ..base() }, vec![]),
        ("stars above range", RepoMeta { stars: 20_001, ..base() }, vec!["stars"]),
        ("created too late", RepoMeta { created_date: date(2017, 3, 1), ..base() }, vec!["created"]),
        ("created too early", RepoMeta { created_date: date(2014, 12, 31), ..base() }, vec!["created"]),
        (
            "private archived mirror",
            RepoMeta { is_public: false, is_archived: true, is_mirror: true, ..base() },
            vec!["public", "archived", "mirror"],
        ),
        (
            "small and rarely forked",
            RepoMeta { size_kb: 9_999, forks: 9, ..base() },
            vec!["size", "forks"],
        ),
        (
            "thin history and quiet",
            RepoMeta {
                contributor_count: 2,
                total_commits: 999,
                total_issues_closed: 49,
                total_prs_closed: 49,
                recent_prs_30d: 0,
                recent_commits_30d: 0,
                ..base()
            },
            vec![
                "contributors",
                "total_commits",
                "total_issues_closed",
                "total_prs_closed",
                "recent_prs",
                "recent_commits",
            ],
        ),
    ]
}

/// URLs and whether they are kept by the irrelevant-word filter.
pub const URL_CASES: [(&str, bool); 10] = [
    ("github.com/a/ml-tutorial", false),
    ("github.com/a/fastjson", true),
    ("github.com/a/WebServer", false),
    ("github.com/a/rust-101", false),
    ("github.com/a/CV-builder", false),
    ("github.com/a/networking", false),
    ("github.com/a/QA-tools", false),
    ("github.com/a/langchain", false),
    ("github.com/apache/httpd", true),
    ("github.com/a/kubernetes", true),
];

/// Serves canned bodies by URL and records every request.
#[derive(Default)]
pub struct FakeTransport {
    pub routes: BTreeMap<String, HttpResponse>,
    pub requests: Mutex<Vec<String>>,
    /// Responds 401 to everything when set.
    pub reject_all: bool,
}

impl FakeTransport {
    pub fn ok(&mut self, url: &str, body: serde_json::Value) {
        self.routes.insert(
            url.to_string(),
            HttpResponse {
                status: 200,
                rate_remaining: Some(4999),
                rate_reset: None,
                body: body.to_string(),
            },
        );
    }

    pub fn request_count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }
}

impl Transport for FakeTransport {
    fn get(&self, url: &str, _accept: &str, token: Option<&Token>) -> Result<HttpResponse, MineError> {
        self.requests.lock().unwrap().push(url.to_string());
        if self.reject_all || token.is_none() {
            return Ok(HttpResponse {
                status: 401,
                rate_remaining: None,
                rate_reset: None,
                body: "{\"message\":\"Bad credentials\"}".into(),
            });
        }
        Ok(self.routes.get(url).cloned().unwrap_or(HttpResponse {
            status: 404,
            rate_remaining: None,
            rate_reset: None,
            body: "{}".into(),
        }))
    }
}

impl Transport for &FakeTransport {
    fn get(&self, url: &str, accept: &str, token: Option<&Token>) -> Result<HttpResponse, MineError> {
        (**self).get(url, accept, token)
    }
}

/// Creates a bare repository at `dir` with `n` linear commits, the i-th
/// authored by `dev{i % 3}@example.org` one hour after the previous.
pub fn make_repo(dir: &Path, n: usize) {
    let init = Command::new("git").args(["init", "--bare", "--quiet"]).arg(dir).status().unwrap();
    assert!(init.success());
    let mut stream = String::new();
    for i in 0..n {
        let t = 1_451_606_400 + 3600 * i as u64;
        let body = format!("{i}\n");
        let msg = format!("c{i}");
        stream.push_str(&format!(
            "commit refs/heads/master\nauthor dev{a} <dev{a}@example.org> {t} +0000\ncommitter dev{a} <dev{a}@example.org> {t} +0000\ndata {}\n{msg}\nM 644 inline counter\ndata {}\n{body}\n",
            msg.len(),
            body.len(),
            a = i % 3
        ));
    }
    let mut child = Command::new("git")
        .arg("--git-dir")
        .arg(dir)
        .args(["fast-import", "--quiet"])
        .stdin(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stream.as_bytes()).unwrap();
    assert!(child.wait().unwrap().success());
    let head = Command::new("git")
        .arg("--git-dir")
        .arg(dir)
        .args(["symbolic-ref", "HEAD", "refs/heads/master"])
        .status()
        .unwrap();
    assert!(head.success());
}

/// Serves `routes` (keyed by path and query) over plain HTTP on localhost
/// until the process exits. Requests without `Bearer {token}` get 401.
/// Returns the base URL.
pub fn serve(routes: BTreeMap<String, String>, token: &'static str) -> String {
    use std::io::{BufRead, BufReader};
    use std::net::TcpListener;
    use std::sync::Arc;

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let routes = Arc::new(routes);
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let routes = Arc::clone(&routes);
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request = String::new();
                if reader.read_line(&mut request).is_err() {
                    return;
                }
                let path = request.split_whitespace().nth(1).unwrap_or("").to_string();
                let mut authorized = false;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line.trim().is_empty() {
                        break;
                    }
                    if let Some((k, v)) = line.split_once(':') {
                        if k.eq_ignore_ascii_case("authorization") && v.trim() == format!("Bearer {token}") {
                            authorized = true;
                        }
                    }
                }
                let (status, body) = match (authorized, routes.get(&path)) {
                    (false, _) => ("401 Unauthorized", "{\"message\":\"Bad credentials\"}".to_string()),
                    (true, Some(b)) => ("200 OK", b.clone()),
                    (true, None) => ("404 Not Found", "{}".to_string()),
                };
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nX-RateLimit-Remaining: 4999\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
            });
        }
    });
    base
}

/// Routes of a [`FakeTransport`] rebased onto paths for [`serve`].
pub fn routes_by_path(t: &FakeTransport, api: &str) -> BTreeMap<String, String> {
    t.routes
        .iter()
        .map(|(url, r)| (url.strip_prefix(api).unwrap().to_string(), r.body.clone()))
        .collect()
}

pub const API: &str = "http://api.test";

fn list_url(path: &str, page: usize) -> String {
    let sep = if path.contains('?') { '&' } else { '?' };
    format!("{API}/repos/acme/rocket/{path}{sep}per_page={PAGE_SIZE}&page={page}")
}

fn at(day: u32) -> String {
    format!("2016-01-{:02}T12:00:00Z", day.min(28))
}

/// A fake API for acme/rocket: 150 pull requests (two pages), two of them
/// merged, plus a handful of issues, comments, stars and forks.
pub fn fake_api() -> FakeTransport {
    let mut t = FakeTransport::default();
    t.ok(
        &format!("{API}/repos/acme/rocket"),
        json!({"private": false, "archived": false, "mirror_url": null, "stargazers_count": 2,
               "size": 12000, "forks_count": 1, "created_at": "2015-12-30T00:00:00Z"}),
    );
    let pulls: Vec<Value> = (1..=150u64)
        .map(|n| {
            let merged = (n <= 2).then(|| at(3));
            json!({"number": n, "created_at": at(1), "closed_at": at(2), "merged_at": merged})
        })
        .collect();
    t.ok(&list_url("pulls?state=all&sort=created&direction=asc", 1), Value::Array(pulls[..100].to_vec()));
    t.ok(&list_url("pulls?state=all&sort=created&direction=asc", 2), Value::Array(pulls[100..].to_vec()));
    t.ok(
        &list_url("issues?state=all&sort=created&direction=asc", 1),
        json!([
            {"number": 200, "created_at": at(4), "closed_at": at(5)},
            {"number": 201, "created_at": at(6), "closed_at": null},
            {"number": 1, "created_at": at(1), "pull_request": {}}
        ]),
    );
    t.ok(
        &list_url("issues/comments?sort=created&direction=asc", 1),
        json!([
            {"created_at": at(7), "issue_url": format!("{API}/repos/acme/rocket/issues/1")},
            {"created_at": at(8), "issue_url": format!("{API}/repos/acme/rocket/issues/200")}
        ]),
    );
    t.ok(&list_url("pulls/comments?sort=created&direction=asc", 1), json!([{"created_at": at(9)}]));
    t.ok(
        &list_url("issues/events", 1),
        json!([{"event": "merged", "issue": {"number": 1}, "actor": {"login": "alice"}},
               {"event": "closed", "issue": {"number": 2}, "actor": {"login": "carol"}}]),
    );
    t.ok(&format!("{API}/repos/acme/rocket/pulls/2"), json!({"merged_by": {"login": "bob"}}));
    t.ok(&list_url("stargazers", 1), json!([{"starred_at": at(10)}, {"starred_at": at(11)}]));
    t.ok(&list_url("forks?sort=oldest", 1), json!([{"created_at": at(12)}]));
    t.ok(&list_url("contributors?anon=1", 1), json!([{}, {}, {}]));
    t
}

