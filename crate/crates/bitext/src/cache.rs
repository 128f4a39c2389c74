//! Content-addressed page cache.
//!
//! Bodies live under `content/<d[0..2]>/<d[2..4]>/<digest>` where the
//! digest is the SHA-256 of the body. `index.tsv` maps each locator to
//! its digest and fetch metadata, one line per locator:
//!
//! ```text
//! locator <TAB> digest <TAB> final_locator <TAB> content_type <TAB> fetched_at
//! ```
//!
//! `fetched_at` is seconds since the Unix epoch. The index is rewritten
//! through a temporary file and a rename while holding the cache lock,
//! so concurrent writers in one process never interleave.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

const INDEX_FILE: &str = "index.tsv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub digest: String,
    pub final_locator: String,
    pub content_type: String,
    pub fetched_at: u64,
}

#[derive(Debug)]
pub struct Cache {
    root: PathBuf,
    index: Mutex<BTreeMap<String, CacheEntry>>,
}

pub fn digest(body: &[u8]) -> String {
    hex::encode(Sha256::digest(body))
}

pub fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl Cache {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("content"))?;
        let mut index = BTreeMap::new();
        match fs::read_to_string(root.join(INDEX_FILE)) {
            Ok(text) => {
                for line in text.lines() {
                    let f: Vec<&str> = line.split('\t').collect();
                    if f.len() != 5 {
                        log::warn!("skipping malformed cache index line: {line:?}");
                        continue;
                    }
                    index.insert(
                        f[0].to_string(),
                        CacheEntry {
                            digest: f[1].to_string(),
                            final_locator: f[2].to_string(),
                            content_type: f[3].to_string(),
                            fetched_at: f[4].parse().unwrap_or(0),
                        },
                    );
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        Ok(Cache { root, index: Mutex::new(index) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn content_path(&self, digest: &str) -> PathBuf {
        self.root.join("content").join(&digest[..2]).join(&digest[2..4]).join(digest)
    }

    /// Returns the entry and body for `locator` unless it is older than
    /// `max_age` or its body has gone missing or been altered.
    pub fn get(&self, locator: &str, max_age: Option<Duration>) -> Option<(CacheEntry, Vec<u8>)> {
        let entry = self.index.lock().unwrap().get(locator).cloned()?;
        if let Some(max_age) = max_age {
            if now_secs().saturating_sub(entry.fetched_at) > max_age.as_secs() {
                return None;
            }
        }
        let body = fs::read(self.content_path(&entry.digest)).ok()?;
        (digest(&body) == entry.digest).then_some((entry, body))
    }

    pub fn put(&self, locator: &str, final_locator: &str, content_type: &str, body: &[u8]) -> io::Result<CacheEntry> {
        let digest = digest(body);
        let path = self.content_path(&digest);
        if !path.exists() {
            write_atomic(&path, body)?;
        }
        let entry = CacheEntry {
            digest,
            final_locator: final_locator.to_string(),
            content_type: sanitize(content_type),
            fetched_at: now_secs(),
        };
        let mut index = self.index.lock().unwrap();
        index.insert(sanitize(locator), entry.clone());
        let mut text = String::new();
        for (loc, e) in index.iter() {
            text.push_str(&format!(
                "{loc}\t{}\t{}\t{}\t{}\n",
                e.digest,
                sanitize(&e.final_locator),
                e.content_type,
                e.fetched_at
            ));
        }
        write_atomic(&self.root.join(INDEX_FILE), text.as_bytes())?;
        Ok(entry)
    }
}

fn sanitize(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Writes through a uniquely named sibling temp file and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    static COUNTER: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
    let n = COUNTER.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    let tmp = dir.join(format!(
        ".{}.{}.{n}.tmp",
        path.file_name().and_then(|f| f.to_str()).unwrap_or("file"),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn put_get_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        assert!(cache.get("http://a/", None).is_none());
        let e = cache.put("http://a/", "http://a/x", "text/html", b"<p>hi</p>").unwrap();
        assert_eq!(e.digest, digest(b"<p>hi</p>"));
        assert!(cache.content_path(&e.digest).starts_with(dir.path().join("content").join(&e.digest[..2])));
        let (got, body) = cache.get("http://a/", None).unwrap();
        assert_eq!(got, e);
        assert_eq!(body, b"<p>hi</p>");

        let reopened = Cache::open(dir.path()).unwrap();
        assert_eq!(reopened.get("http://a/", None).unwrap().0, e);
    }

    #[test]
    fn identical_bodies_share_content() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        let a = cache.put("http://a/", "http://a/", "text/html", b"same").unwrap();
        let b = cache.put("http://b/", "http://b/", "text/html", b"same").unwrap();
        assert_eq!(a.digest, b.digest);
    }

    #[test]
    fn corrupted_body_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        let e = cache.put("http://a/", "http://a/", "text/html", b"body").unwrap();
        fs::write(cache.content_path(&e.digest), b"tampered").unwrap();
        assert!(cache.get("http://a/", None).is_none());
    }

    #[test]
    fn expiry() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        cache.put("http://a/", "http://a/", "text/html", b"body").unwrap();
        cache.index.lock().unwrap().get_mut("http://a/").unwrap().fetched_at -= 100;
        assert!(cache.get("http://a/", Some(Duration::from_secs(10))).is_none());
        assert!(cache.get("http://a/", Some(Duration::from_secs(1000))).is_some());
    }
}
