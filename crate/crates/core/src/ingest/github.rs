//! Live timeline fetches from a GitHub-style REST API.
//!
//! [`GithubClient::fetch_issue`] merges three endpoints into one
//! [`RawTimeline`]:
//!
//! - `GET /repos/{owner}/{repo}/issues/{n}` — title, labels, state, and the
//!   opening post (which becomes the first comment event when non-empty);
//! - `GET .../issues/{n}/comments` — comment events;
//! - `GET .../issues/{n}/timeline` — change events: `committed` entries
//!   become commit events, and `cross-referenced` pull requests from the
//!   same repository become PR events (foreign-repository references are
//!   skipped, so they never count as the linked change).
//!
//! Issue links for change events are parsed from `#123` references in the
//! event text; an event with no references is implicitly linked to the
//! issue whose timeline carries it. Events are sorted by timestamp with
//! ties keeping fetch order. The client is sequential and holds no shared
//! mutable state; rate limits surface as retryable errors carrying the
//! server's `Retry-After` hint.

use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::thread;
use std::time::Duration;

use regex::Regex;
use serde::Deserialize;
use ureq::Agent;

use crate::corpus::{Event, EventKind, IssueState, RawTimeline};

/// How a fetch failed. [`FetchError::is_transient`] marks the cases a caller
/// may retry (rate limits and network trouble).
#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    #[error("not found: {resource}")]
    NotFound { resource: String },
    #[error("rate limited (retry-after: {})", retry_after_secs.map_or("unknown".to_string(), |s| format!("{s}s")))]
    RateLimited { retry_after_secs: Option<u64> },
    #[error("HTTP {status} for {resource}")]
    Status { status: u16, resource: String },
    #[error("network: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl FetchError {
    /// True for failures that may clear on retry.
    pub fn is_transient(&self) -> bool {
        matches!(self, FetchError::RateLimited { .. } | FetchError::Transport(_))
    }
}

const PAGE_SIZE: usize = 100;
const MAX_BACKOFF: Duration = Duration::from_secs(60);

/// A minimal, sequential REST client. `base_url` is configurable so tests
/// (and GitHub Enterprise hosts) can point it anywhere.
pub struct GithubClient {
    agent: Agent,
    base_url: String,
    token: Option<String>,
}

impl GithubClient {
    pub const DEFAULT_BASE_URL: &'static str = "https://api.github.com";

    pub fn new(base_url: impl Into<String>, token: Option<String>) -> Self {
        let config = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build();
        let mut base_url = base_url.into();
        while base_url.ends_with('/') {
            base_url.pop();
        }
        GithubClient { agent: config.new_agent(), base_url, token }
    }

    /// Client against the public API, authenticated from `GITHUB_TOKEN` when
    /// the variable is set and non-empty.
    pub fn from_env() -> Self {
        let token = std::env::var("GITHUB_TOKEN").ok().filter(|t| !t.is_empty());
        GithubClient::new(Self::DEFAULT_BASE_URL, token)
    }

    /// Fetches and merges one issue into a timestamp-sorted timeline.
    pub fn fetch_issue(&self, project: &str, issue_number: u64) -> Result<RawTimeline, FetchError> {
        let (owner, repo) = project
            .split_once('/')
            .filter(|(o, r)| !o.is_empty() && !r.is_empty())
            .ok_or_else(|| FetchError::Malformed(format!("project `{project}` is not owner/name")))?;
        let base = format!("repos/{owner}/{repo}/issues/{issue_number}");

        let issue: IssueJson = self.get_json(&base)?;
        let comments: Vec<CommentJson> = self.get_paged(&format!("{base}/comments"))?;
        let entries: Vec<TimelineEntryJson> = self.get_paged(&format!("{base}/timeline"))?;

        let mut events = Vec::new();
        if let Some(body) = issue.body.as_deref().filter(|b| !b.trim().is_empty()) {
            events.push(make_event(
                EventKind::Comment,
                login_or_ghost(&issue.user),
                &issue.created_at,
                body,
                Vec::new(),
            )?);
        }
        for c in &comments {
            let body = c.body.as_deref().unwrap_or_default();
            events.push(make_event(
                EventKind::Comment,
                login_or_ghost(&c.user),
                &c.created_at,
                body,
                Vec::new(),
            )?);
        }
        for entry in &entries {
            match entry.event.as_str() {
                "committed" => {
                    let author = entry.author.as_ref().ok_or_else(|| {
                        FetchError::Malformed("committed event without author".into())
                    })?;
                    let message = entry.message.as_deref().unwrap_or_default();
                    events.push(make_event(
                        EventKind::Commit,
                        author.name.as_deref().unwrap_or("unknown"),
                        &author.date,
                        message,
                        linked_refs(message, issue_number),
                    )?);
                }
                "cross-referenced" => {
                    let Some(source) = entry.source.as_ref().and_then(|s| s.issue.as_ref()) else {
                        continue;
                    };
                    // Only pull requests are change events, and only from
                    // this repository.
                    if source.pull_request.is_none() {
                        continue;
                    }
                    if let Some(repo_json) = &source.repository {
                        if !repo_json.full_name.eq_ignore_ascii_case(project) {
                            continue;
                        }
                    }
                    let ts = entry.created_at.as_deref().ok_or_else(|| {
                        FetchError::Malformed("cross-referenced event without created_at".into())
                    })?;
                    let title = source.title.as_deref().unwrap_or_default();
                    events.push(make_event(
                        EventKind::PullRequest,
                        login_or_ghost(&entry.actor),
                        ts,
                        title,
                        linked_refs(title, issue_number),
                    )?);
                }
                _ => {}
            }
        }

        RawTimeline::from_unordered(
            project,
            issue_number,
            issue.title,
            issue.labels.into_iter().map(|l| l.name).collect(),
            if issue.state.eq_ignore_ascii_case("closed") {
                IssueState::Closed
            } else {
                IssueState::Open
            },
            events,
        )
        .map_err(|e| FetchError::Malformed(e.to_string()))
    }

    /// [`fetch_issue`](Self::fetch_issue) with retries on transient errors:
    /// sleeps the server's retry-after hint when present, otherwise
    /// `base_delay`, `2·base_delay`, `4·base_delay`, … capped at one minute.
    pub fn fetch_issue_with_backoff(
        &self,
        project: &str,
        issue_number: u64,
        max_retries: u32,
        base_delay: Duration,
    ) -> Result<RawTimeline, FetchError> {
        let mut attempt = 0u32;
        loop {
            match self.fetch_issue(project, issue_number) {
                Err(e) if e.is_transient() && attempt < max_retries => {
                    let delay = match &e {
                        FetchError::RateLimited { retry_after_secs: Some(s) } => {
                            Duration::from_secs(*s)
                        }
                        _ => base_delay.saturating_mul(1u32 << attempt.min(16)),
                    };
                    thread::sleep(delay.min(MAX_BACKOFF));
                    attempt += 1;
                }
                outcome => return outcome,
            }
        }
    }

    /// One GET returning parsed JSON, with status-code mapping.
    fn get_json<T: serde::de::DeserializeOwned>(&self, path: &str) -> Result<T, FetchError> {
        let url = format!("{}/{}", self.base_url, path);
        let mut request = self
            .agent
            .get(&url)
            .header("user-agent", "fixdesc")
            .header("accept", "application/vnd.github+json")
            .header("x-github-api-version", "2022-11-28");
        if let Some(token) = &self.token {
            request = request.header("authorization", format!("Bearer {token}"));
        }
        let mut response = request.call().map_err(|e| FetchError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        match status {
            200..=299 => response
                .body_mut()
                .read_json::<T>()
                .map_err(|e| FetchError::Malformed(e.to_string())),
            404 => Err(FetchError::NotFound { resource: path.to_string() }),
            403 | 429 => {
                let retry_after_secs = response
                    .headers()
                    .get("retry-after")
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.trim().parse().ok());
                Err(FetchError::RateLimited { retry_after_secs })
            }
            _ => Err(FetchError::Status { status, resource: path.to_string() }),
        }
    }

    /// Follows `page=1,2,…` until a short page, concatenating the arrays.
    fn get_paged<T: serde::de::DeserializeOwned>(&self, path: &str) -> Result<Vec<T>, FetchError> {
        let mut out = Vec::new();
        for page in 1.. {
            let url = format!("{path}?per_page={PAGE_SIZE}&page={page}");
            let mut items: Vec<T> = self.get_json(&url)?;
            let n = items.len();
            out.append(&mut items);
            if n < PAGE_SIZE {
                break;
            }
        }
        Ok(out)
    }
}

fn login_or_ghost(user: &Option<UserJson>) -> &str {
    user.as_ref().map_or("ghost", |u| u.login.as_str())
}

/// Unique `#123` references in `text`, or the implicit link to `own` when
/// the text references nothing.
fn linked_refs(text: &str, own: u64) -> Vec<u64> {
    static ISSUE_REF: OnceLock<Regex> = OnceLock::new();
    let re = ISSUE_REF.get_or_init(|| Regex::new(r"#(\d+)").expect("valid regex"));
    let refs: BTreeSet<u64> =
        re.captures_iter(text).filter_map(|c| c[1].parse().ok()).collect();
    if refs.is_empty() {
        vec![own]
    } else {
        refs.into_iter().collect()
    }
}

fn make_event(
    kind: EventKind,
    actor: &str,
    created_at: &str,
    text: &str,
    linked_issues: Vec<u64>,
) -> Result<Event, FetchError> {
    let ts = chrono::DateTime::parse_from_rfc3339(created_at)
        .map_err(|e| FetchError::Malformed(format!("timestamp `{created_at}`: {e}")))?
        .timestamp();
    Event::new(kind, actor, ts, text, linked_issues)
        .map_err(|e| FetchError::Malformed(e.to_string()))
}

#[derive(Deserialize)]
struct IssueJson {
    title: String,
    state: String,
    #[serde(default)]
    labels: Vec<LabelJson>,
    #[serde(default)]
    user: Option<UserJson>,
    created_at: String,
    #[serde(default)]
    body: Option<String>,
}

#[derive(Deserialize)]
struct LabelJson {
    name: String,
}

#[derive(Deserialize)]
struct UserJson {
    login: String,
}

#[derive(Deserialize)]
struct CommentJson {
    #[serde(default)]
    user: Option<UserJson>,
    created_at: String,
    #[serde(default)]
    body: Option<String>,
}

#[derive(Deserialize)]
struct TimelineEntryJson {
    event: String,
    #[serde(default)]
    actor: Option<UserJson>,
    #[serde(default)]
    created_at: Option<String>,
    #[serde(default)]
    message: Option<String>,
    #[serde(default)]
    author: Option<GitActorJson>,
    #[serde(default)]
    source: Option<SourceJson>,
}

#[derive(Deserialize)]
struct GitActorJson {
    #[serde(default)]
    name: Option<String>,
    date: String,
}

#[derive(Deserialize)]
struct SourceJson {
    #[serde(default)]
    issue: Option<SourceIssueJson>,
}

#[derive(Deserialize)]
struct SourceIssueJson {
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    pull_request: Option<serde_json::Value>,
    #[serde(default)]
    repository: Option<RepositoryJson>,
}

#[derive(Deserialize)]
struct RepositoryJson {
    full_name: String,
}
