//! Polite page retrieval into the content-addressed cache.
//!
//! Every HTTP request, robots.txt included, goes through a per-host
//! gate: requests to one host are serialized and each starts at least
//! `min_interval` after the previous one finished. robots.txt is fetched
//! once per origin and consulted before every page request and every
//! redirect hop. `file://` locators are read from disk.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::thread;
use std::time::{Duration, Instant};

use bitext_core::CandidatePair;
use serde::{Deserialize, Serialize};
use url::Url;

use crate::cache::{now_secs, Cache};
use crate::robots::Robots;

#[derive(Debug, Clone, PartialEq)]
pub struct FetchPolicy {
    pub user_agent: String,
    /// Minimum gap between the end of one request to a host and the
    /// start of the next.
    pub min_interval: Duration,
    pub timeout: Duration,
    pub max_redirects: usize,
    /// Extra attempts after a transient failure.
    pub retries: usize,
    /// Cached pages older than this are fetched again; `None` never expires.
    pub max_age: Option<Duration>,
    pub max_body_bytes: u64,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        FetchPolicy {
            user_agent: concat!("bitext/", env!("CARGO_PKG_VERSION")).to_string(),
            min_interval: Duration::from_secs(1),
            timeout: Duration::from_secs(30),
            max_redirects: 5,
            retries: 1,
            max_age: None,
            max_body_bytes: 10 * 1024 * 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FetchStatus {
    Ok,
    NotFound,
    /// Retrieved after redirection.
    Moved {
        final_locator: String,
    },
    Empty,
    Unreachable {
        detail: String,
    },
    RobotsDenied,
    NonHtml {
        content_type: String,
    },
}

impl FetchStatus {
    /// A body is available for evaluation.
    pub fn has_body(&self) -> bool {
        matches!(self, FetchStatus::Ok | FetchStatus::Moved { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            FetchStatus::Ok => "ok",
            FetchStatus::NotFound => "not_found",
            FetchStatus::Moved { .. } => "moved",
            FetchStatus::Empty => "empty",
            FetchStatus::Unreachable { .. } => "unreachable",
            FetchStatus::RobotsDenied => "robots_denied",
            FetchStatus::NonHtml { .. } => "non_html",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchResult {
    pub locator: String,
    #[serde(flatten)]
    pub status: FetchStatus,
    /// SHA-256 of the body; present iff a body is available.
    pub digest: Option<String>,
    pub cache_path: Option<PathBuf>,
    /// Charset from the transport, if any.
    pub content_type: Option<String>,
    pub fetched_at: u64,
}

impl FetchResult {
    fn failed(locator: &str, status: FetchStatus) -> Self {
        FetchResult {
            locator: locator.to_string(),
            status,
            digest: None,
            cache_path: None,
            content_type: None,
            fetched_at: now_secs(),
        }
    }
}

/// True for HTML media types, or, without a header, for bodies that
/// look like HTML in their first 1024 bytes.
pub fn is_html(content_type: Option<&str>, body: &[u8]) -> bool {
    match content_type.map(|ct| ct.split(';').next().unwrap_or("").trim().to_ascii_lowercase()) {
        Some(mime) if !mime.is_empty() => mime == "text/html" || mime == "application/xhtml+xml",
        _ => sniff_html(body),
    }
}

pub fn sniff_html(body: &[u8]) -> bool {
    let head = body[..body.len().min(1024)].to_ascii_lowercase();
    head.windows(5).any(|w| w == b"<html") || head.windows(9).any(|w| w == b"<!doctype")
}

fn content_type_for_path(path: &std::path::Path, body: &[u8]) -> String {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "html" | "htm" | "shtml" => "text/html".into(),
        "xhtml" => "application/xhtml+xml".into(),
        "pdf" => "application/pdf".into(),
        "txt" => "text/plain".into(),
        "gif" => "image/gif".into(),
        "jpg" | "jpeg" => "image/jpeg".into(),
        "png" => "image/png".into(),
        _ if sniff_html(body) => "text/html".into(),
        _ => "application/octet-stream".into(),
    }
}

type HostGate = Arc<Mutex<Option<Instant>>>;
type RobotsSlot = Arc<OnceLock<Result<Robots, String>>>;

pub struct Fetcher {
    policy: FetchPolicy,
    cache: Cache,
    agent: ureq::Agent,
    gates: Mutex<HashMap<String, HostGate>>,
    /// Filled once per origin; concurrent first requests wait on the one fetch.
    robots: Mutex<HashMap<String, RobotsSlot>>,
    requests: AtomicUsize,
}

enum Attempt {
    Response { status: u16, location: Option<String>, content_type: Option<String>, body: Vec<u8> },
    Failed(String),
}

impl Fetcher {
    pub fn new(policy: FetchPolicy, cache: Cache) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(policy.timeout))
            .max_redirects(0)
            .http_status_as_error(false)
            .user_agent(policy.user_agent.as_str())
            .build()
            .into();
        Fetcher {
            policy,
            cache,
            agent,
            gates: Mutex::new(HashMap::new()),
            robots: Mutex::new(HashMap::new()),
            requests: AtomicUsize::new(0),
        }
    }

    pub fn cache(&self) -> &Cache {
        &self.cache
    }

    pub fn policy(&self) -> &FetchPolicy {
        &self.policy
    }

    /// Number of HTTP requests issued so far, robots.txt included.
    pub fn network_requests(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    pub fn fetch(&self, locator: &str) -> FetchResult {
        let url = match Url::parse(locator) {
            Ok(u) => u,
            Err(e) => {
                return FetchResult::failed(
                    locator,
                    FetchStatus::Unreachable { detail: format!("invalid locator: {e}") },
                )
            }
        };
        match url.scheme() {
            "file" => self.fetch_file(locator, &url),
            "http" | "https" => self.fetch_http(locator, url),
            other => {
                FetchResult::failed(locator, FetchStatus::Unreachable { detail: format!("unsupported scheme {other}") })
            }
        }
    }

    /// Returns the body for a successful result, from the cache.
    pub fn body(&self, result: &FetchResult) -> Option<Vec<u8>> {
        let path = result.cache_path.as_ref()?;
        fs::read(path).ok()
    }

    fn fetch_file(&self, locator: &str, url: &Url) -> FetchResult {
        let Ok(path) = url.to_file_path() else {
            return FetchResult::failed(locator, FetchStatus::Unreachable { detail: "bad file locator".into() });
        };
        let body = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return FetchResult::failed(locator, FetchStatus::NotFound)
            }
            Err(e) => return FetchResult::failed(locator, FetchStatus::Unreachable { detail: e.to_string() }),
        };
        let ct = content_type_for_path(&path, &body);
        self.finish(locator, locator, Some(ct), body)
    }

    fn finish(&self, locator: &str, final_locator: &str, content_type: Option<String>, body: Vec<u8>) -> FetchResult {
        if body.is_empty() {
            return FetchResult::failed(locator, FetchStatus::Empty);
        }
        if !is_html(content_type.as_deref(), &body) {
            let ct = content_type.unwrap_or_else(|| "application/octet-stream".into());
            return FetchResult::failed(locator, FetchStatus::NonHtml { content_type: ct });
        }
        let ct = content_type.unwrap_or_else(|| "text/html".into());
        match self.cache.put(locator, final_locator, &ct, &body) {
            Ok(entry) => self.result_from_entry(locator, &entry),
            Err(e) => FetchResult::failed(locator, FetchStatus::Unreachable { detail: format!("cache write: {e}") }),
        }
    }

    fn result_from_entry(&self, locator: &str, entry: &crate::cache::CacheEntry) -> FetchResult {
        let status = if entry.final_locator == locator {
            FetchStatus::Ok
        } else {
            FetchStatus::Moved { final_locator: entry.final_locator.clone() }
        };
        FetchResult {
            locator: locator.to_string(),
            status,
            digest: Some(entry.digest.clone()),
            cache_path: Some(self.cache.content_path(&entry.digest)),
            content_type: Some(entry.content_type.clone()),
            fetched_at: entry.fetched_at,
        }
    }

    fn fetch_http(&self, locator: &str, mut url: Url) -> FetchResult {
        if let Some((entry, _)) = self.cache.get(locator, self.policy.max_age) {
            return self.result_from_entry(locator, &entry);
        }
        let mut hops = 0;
        loop {
            match self.robots_allow(&url) {
                Ok(true) => {}
                Ok(false) => return FetchResult::failed(locator, FetchStatus::RobotsDenied),
                Err(detail) => return FetchResult::failed(locator, FetchStatus::Unreachable { detail }),
            }
            let attempt = self.request_with_retry(&url);
            let (status, location, content_type, body) = match attempt {
                Attempt::Failed(detail) => return FetchResult::failed(locator, FetchStatus::Unreachable { detail }),
                Attempt::Response { status, location, content_type, body } => (status, location, content_type, body),
            };
            match status {
                200..=299 => return self.finish(locator, url.as_str(), content_type, body),
                300..=399 => {
                    let Some(next) = location.and_then(|l| url.join(&l).ok()) else {
                        return FetchResult::failed(
                            locator,
                            FetchStatus::Unreachable { detail: format!("HTTP {status} without location") },
                        );
                    };
                    hops += 1;
                    if hops > self.policy.max_redirects {
                        return FetchResult::failed(
                            locator,
                            FetchStatus::Unreachable { detail: "too many redirects".into() },
                        );
                    }
                    url = next;
                }
                404 | 410 => return FetchResult::failed(locator, FetchStatus::NotFound),
                _ => {
                    return FetchResult::failed(locator, FetchStatus::Unreachable { detail: format!("HTTP {status}") })
                }
            }
        }
    }

    fn gate(&self, url: &Url) -> HostGate {
        let key = format!("{}:{}", url.host_str().unwrap_or(""), url.port_or_known_default().unwrap_or(0));
        self.gates.lock().unwrap().entry(key).or_default().clone()
    }

    /// Issues one GET through the host gate.
    fn request(&self, url: &Url) -> Attempt {
        let gate = self.gate(url);
        let mut last = gate.lock().unwrap();
        if let Some(prev) = *last {
            let ready = prev + self.policy.min_interval;
            let now = Instant::now();
            if ready > now {
                thread::sleep(ready - now);
            }
        }
        self.requests.fetch_add(1, Ordering::Relaxed);
        log::debug!("GET {url}");
        let outcome = match self.agent.get(url.as_str()).call() {
            Ok(mut resp) => {
                let header = |name: &str| resp.headers().get(name).and_then(|v| v.to_str().ok()).map(str::to_string);
                let location = header("location");
                let content_type = header("content-type");
                let status = resp.status().as_u16();
                let mut body = Vec::new();
                let read = resp.body_mut().as_reader().take(self.policy.max_body_bytes).read_to_end(&mut body);
                match read {
                    Ok(_) => Attempt::Response { status, location, content_type, body },
                    Err(e) => Attempt::Failed(format!("reading body: {e}")),
                }
            }
            Err(e) => Attempt::Failed(e.to_string()),
        };
        *last = Some(Instant::now());
        outcome
    }

    fn request_with_retry(&self, url: &Url) -> Attempt {
        let mut attempt = self.request(url);
        for _ in 0..self.policy.retries {
            let transient = match &attempt {
                Attempt::Failed(_) => true,
                Attempt::Response { status, .. } => matches!(status, 500 | 502 | 503 | 504),
            };
            if !transient {
                break;
            }
            attempt = self.request(url);
        }
        attempt
    }

    fn robots_allow(&self, url: &Url) -> Result<bool, String> {
        let origin = url.origin().ascii_serialization();
        let slot = self.robots.lock().unwrap().entry(origin).or_default().clone();
        match slot.get_or_init(|| self.fetch_robots(url)) {
            Ok(robots) => {
                let mut path = url.path().to_string();
                if let Some(q) = url.query() {
                    path.push('?');
                    path.push_str(q);
                }
                Ok(robots.is_allowed(&self.policy.user_agent, &path))
            }
            Err(e) => Err(e.clone()),
        }
    }

    fn fetch_robots(&self, url: &Url) -> Result<Robots, String> {
        let robots_url = url.join("/robots.txt").map_err(|e| e.to_string())?;
        match self.request_with_retry(&robots_url) {
            Attempt::Response { status: 200..=299, body, .. } => Ok(Robots::parse(&String::from_utf8_lossy(&body))),
            Attempt::Response { status: 401 | 403, .. } => Ok(Robots::deny_all()),
            Attempt::Response { status: 500..=599, .. } => Ok(Robots::deny_all()),
            // absent robots.txt (including redirects we do not chase) allows everything
            Attempt::Response { .. } => Ok(Robots::allow_all()),
            Attempt::Failed(detail) => Err(detail),
        }
    }
}

/// Indices into the candidate list, split by what deduplication did.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DedupOutcome {
    pub kept: Vec<usize>,
    /// Repeats of an earlier (url1, url2) entry.
    pub duplicates: Vec<usize>,
    /// Pairs whose sides name the same locator or have the same body.
    pub identical: Vec<usize>,
}

/// Drops repeated (url1, url2) entries, then pairs whose sides name the
/// same locator or whose fetched bodies have equal digests. Pairs with a
/// side that has no body are kept for the caller to classify.
pub fn dedup_identical(pairs: &[CandidatePair], results: &HashMap<String, FetchResult>) -> DedupOutcome {
    let mut seen = HashSet::new();
    let mut out = DedupOutcome::default();
    for (i, pair) in pairs.iter().enumerate() {
        if !seen.insert((pair.url1.as_str(), pair.url2.as_str())) {
            out.duplicates.push(i);
            continue;
        }
        let digest = |u: &str| results.get(u).and_then(|r| r.digest.as_deref());
        let same =
            pair.url1 == pair.url2 || matches!((digest(&pair.url1), digest(&pair.url2)), (Some(a), Some(b)) if a == b);
        if same {
            out.identical.push(i);
        } else {
            out.kept.push(i);
        }
    }
    out
}
