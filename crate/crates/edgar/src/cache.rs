//! On-disk cache of downloaded documents and index files.
//!
//! Layout under the cache root:
//!
//! ```text
//! filings/{accession}.{htm|txt}   primary document bytes
//! filings/{accession}.json        sidecar: checksum, source url, time, filing
//! index/{key}                     index/listing response bytes
//! index/{key}.json                sidecar
//! ```
//!
//! Every write goes to a temp file in the same directory and is renamed into
//! place, and the sidecar is written last, so a crash leaves at worst an
//! orphan body that reads as a miss.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tenkscan_core::{ContentKind, FilingRef};
use tracing::warn;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheMeta {
    pub sha256: String,
    pub url: String,
    pub retrieved_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_kind: Option<ContentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filing: Option<FilingRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub body: Vec<u8>,
    pub meta: CacheMeta,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone)]
pub struct FilingCache {
    root: PathBuf,
}

impl FilingCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FilingCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn filing_paths(&self, accession: &str, kind: ContentKind) -> (PathBuf, PathBuf) {
        let dir = self.root.join("filings");
        let ext = match kind {
            ContentKind::Html => "htm",
            ContentKind::PlainText => "txt",
        };
        (dir.join(format!("{accession}.{ext}")), dir.join(format!("{accession}.json")))
    }

    fn index_paths(&self, key: &str) -> (PathBuf, PathBuf) {
        let dir = self.root.join("index");
        let name = index_key(key);
        (dir.join(&name), dir.join(format!("{name}.json")))
    }

    /// Cached primary document of `accession`, if present and intact.
    pub fn get_filing(&self, accession: &str) -> io::Result<Option<CacheEntry>> {
        let sidecar = self.root.join("filings").join(format!("{accession}.json"));
        let Some(meta) = read_meta(&sidecar)? else {
            return Ok(None);
        };
        let kind = meta.content_kind.unwrap_or(ContentKind::Html);
        let (body_path, sidecar) = self.filing_paths(accession, kind);
        read_checked(&body_path, &sidecar, meta)
    }

    pub fn put_filing(&self, accession: &str, body: &[u8], meta: &CacheMeta) -> io::Result<()> {
        let kind = meta.content_kind.unwrap_or(ContentKind::Html);
        let (body_path, sidecar) = self.filing_paths(accession, kind);
        write_pair(&body_path, &sidecar, body, meta)
    }

    pub fn get_index(&self, key: &str) -> io::Result<Option<CacheEntry>> {
        let (body_path, sidecar) = self.index_paths(key);
        let Some(meta) = read_meta(&sidecar)? else {
            return Ok(None);
        };
        read_checked(&body_path, &sidecar, meta)
    }

    pub fn put_index(&self, key: &str, body: &[u8], meta: &CacheMeta) -> io::Result<()> {
        let (body_path, sidecar) = self.index_paths(key);
        write_pair(&body_path, &sidecar, body, meta)
    }

    /// Paths of every cached body file, sorted. Handy for idempotence checks.
    pub fn files(&self) -> io::Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        for sub in ["filings", "index"] {
            let dir = self.root.join(sub);
            let entries = match std::fs::read_dir(&dir) {
                Ok(e) => e,
                Err(e) if e.kind() == io::ErrorKind::NotFound => continue,
                Err(e) => return Err(e),
            };
            for entry in entries {
                out.push(entry?.path());
            }
        }
        out.sort();
        Ok(out)
    }
}

/// File name for an index url or key: alphanumerics kept, the rest folded
/// to `_`, plus a short hash so distinct keys never collide.
fn index_key(key: &str) -> String {
    let readable: String = key
        .trim_start_matches("https://")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect();
    let tail = &sha256_hex(key.as_bytes())[..12];
    let readable = if readable.len() > 120 { &readable[readable.len() - 120..] } else { &readable };
    format!("{readable}_{tail}")
}

fn read_meta(sidecar: &Path) -> io::Result<Option<CacheMeta>> {
    let text = match std::fs::read_to_string(sidecar) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e),
    };
    match serde_json::from_str(&text) {
        Ok(meta) => Ok(Some(meta)),
        Err(e) => {
            warn!(path = %sidecar.display(), error = %e, "unreadable cache sidecar, evicting");
            remove_if_exists(sidecar)?;
            Ok(None)
        }
    }
}

fn read_checked(body_path: &Path, sidecar: &Path, meta: CacheMeta) -> io::Result<Option<CacheEntry>> {
    let body = match std::fs::read(body_path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            remove_if_exists(sidecar)?;
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    if sha256_hex(&body) != meta.sha256 {
        warn!(path = %body_path.display(), "cache checksum mismatch, evicting");
        remove_if_exists(body_path)?;
        remove_if_exists(sidecar)?;
        return Ok(None);
    }
    Ok(Some(CacheEntry { body, meta }))
}

fn write_pair(body_path: &Path, sidecar: &Path, body: &[u8], meta: &CacheMeta) -> io::Result<()> {
    atomic_write(body_path, body)?;
    let json = serde_json::to_vec_pretty(meta).map_err(io::Error::other)?;
    atomic_write(sidecar, &json)
}

pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn remove_if_exists(path: &Path) -> io::Result<()> {
    match std::fs::remove_file(path) {
        Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e),
        _ => Ok(()),
    }
}
