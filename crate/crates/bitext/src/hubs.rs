//! Hub pages and candidate generation from them.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bitext_core::candidates::extract_raw_candidates;
use bitext_core::{build_query, CandidatePair, GeneratorConfig};
use url::Url;

use crate::decode::{charset_from_content_type, decode_html};
use crate::fetch::Fetcher;

/// A page that links to language versions of other pages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hub {
    pub locator: String,
    pub html: String,
}

pub trait HubSource {
    /// Hub pages for `query`, in a stable order.
    fn hubs(&self, query: &str, fetcher: &Fetcher) -> Result<Vec<Hub>>;
}

/// Hub pages stored on disk. Directories contribute their `.html` and
/// `.htm` files in name order.
#[derive(Debug, Clone, Default)]
pub struct LocalFileHubs {
    pub paths: Vec<PathBuf>,
}

impl LocalFileHubs {
    pub fn new(paths: Vec<PathBuf>) -> Self {
        LocalFileHubs { paths }
    }

    pub fn files(&self) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        for path in &self.paths {
            if path.is_dir() {
                let mut entries: Vec<PathBuf> = fs::read_dir(path)
                    .with_context(|| format!("reading {}", path.display()))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| {
                        p.extension()
                            .and_then(|e| e.to_str())
                            .is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"))
                    })
                    .collect();
                entries.sort();
                out.extend(entries);
            } else if path.is_file() {
                out.push(path.clone());
            } else {
                bail!("hub path {} does not exist", path.display());
            }
        }
        Ok(out)
    }
}

pub fn file_locator(path: &Path) -> Result<String> {
    let abs = fs::canonicalize(path).with_context(|| format!("resolving {}", path.display()))?;
    Url::from_file_path(&abs)
        .map(String::from)
        .map_err(|_| anyhow::anyhow!("cannot make a locator for {}", abs.display()))
}

impl HubSource for LocalFileHubs {
    fn hubs(&self, _query: &str, _fetcher: &Fetcher) -> Result<Vec<Hub>> {
        self.files()?
            .into_iter()
            .map(|path| {
                let bytes = fs::read(&path).with_context(|| format!("reading hub {}", path.display()))?;
                Ok(Hub { locator: file_locator(&path)?, html: decode_html(&bytes, None).into_owned() })
            })
            .collect()
    }
}

/// Hubs found through a search service. The template is a URL with a
/// `{query}` placeholder; every http(s) link on the result page is taken
/// as a hub and fetched through the same polite fetcher.
#[derive(Debug, Clone)]
pub struct HttpSearchHubs {
    pub template: String,
    pub max_hits: Option<usize>,
}

pub fn search_url(template: &str, query: &str) -> Result<String> {
    if !template.contains("{query}") {
        bail!("search template {template:?} has no {{query}} placeholder");
    }
    let encoded: String = url::form_urlencoded::byte_serialize(query.as_bytes()).collect();
    let url = template.replace("{query}", &encoded);
    Url::parse(&url).with_context(|| format!("bad search url {url:?}"))?;
    Ok(url)
}

impl HubSource for HttpSearchHubs {
    fn hubs(&self, query: &str, fetcher: &Fetcher) -> Result<Vec<Hub>> {
        let url = search_url(&self.template, query)?;
        let page = fetch_text(fetcher, &url).with_context(|| format!("search request {url}"))?;
        let base = Url::parse(&url)?;
        let mut links: Vec<String> = Vec::new();
        for anchor in bitext_core::candidates::parse_anchors(&page) {
            let Ok(link) = base.join(&anchor.href) else { continue };
            if matches!(link.scheme(), "http" | "https") && link.host() != base.host() {
                let link = String::from(link);
                if !links.contains(&link) {
                    links.push(link);
                }
            }
        }
        if let Some(max) = self.max_hits {
            links.truncate(max);
        }
        let mut hubs = Vec::new();
        for link in links {
            match fetch_text(fetcher, &link) {
                Ok(html) => hubs.push(Hub { locator: link, html }),
                Err(e) => log::warn!("skipping hub {link}: {e:#}"),
            }
        }
        Ok(hubs)
    }
}

fn fetch_text(fetcher: &Fetcher, locator: &str) -> Result<String> {
    let result = fetcher.fetch(locator);
    if !result.status.has_body() {
        bail!("{}", result.status.label());
    }
    let body = fetcher.body(&result).context("cached body missing")?;
    let hint = result.content_type.as_deref().and_then(charset_from_content_type);
    Ok(decode_html(&body, hint).into_owned())
}

/// Candidates from one hub with hrefs resolved against the hub locator.
/// Links that are not http(s) or file locators are dropped, and pairs
/// that coincide after resolution keep their smallest distance.
pub fn extract_candidates(hub_html: &str, hub_locator: &str, cfg: &GeneratorConfig) -> Vec<CandidatePair> {
    let base = Url::parse(hub_locator).ok();
    let resolve = |href: &str| -> Option<String> {
        let url = match &base {
            Some(b) => b.join(href).ok()?,
            None => Url::parse(href).ok()?,
        };
        matches!(url.scheme(), "http" | "https" | "file").then(|| String::from(url))
    };
    let mut out: Vec<CandidatePair> = Vec::new();
    for raw in extract_raw_candidates(hub_html, hub_locator, cfg) {
        let (Some(url1), Some(url2)) = (resolve(&raw.url1), resolve(&raw.url2)) else {
            continue;
        };
        match out.iter_mut().find(|c| c.url1 == url1 && c.url2 == url2) {
            Some(c) => c.line_distance = c.line_distance.min(raw.line_distance),
            None => out.push(CandidatePair { url1, url2, ..raw }),
        }
    }
    out
}

/// Runs the query against `source` and collects candidates from every
/// hub in order. Pairs repeated across hubs are kept.
pub fn generate(source: &dyn HubSource, cfg: &GeneratorConfig, fetcher: &Fetcher) -> Result<Vec<CandidatePair>> {
    let query = build_query(&cfg.lang1_names[0], &cfg.lang2_names[0]);
    let mut hubs = source.hubs(&query, fetcher)?;
    if let Some(max) = cfg.max_hits {
        hubs.truncate(max);
    }
    Ok(hubs.iter().flat_map(|hub| extract_candidates(&hub.html, &hub.locator, cfg)).collect())
}
