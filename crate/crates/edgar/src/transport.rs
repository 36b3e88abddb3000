//! How bytes are fetched: real HTTP, or a local mirror of the archive tree.

use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

/// Status and body of one GET.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub body: Vec<u8>,
}

impl Response {
    pub fn ok(body: impl Into<Vec<u8>>) -> Self {
        Response { status: 200, body: body.into() }
    }

    pub fn status(status: u16) -> Self {
        Response { status, body: Vec::new() }
    }
}

/// A failure below HTTP: DNS, connect, TLS, timeout.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{0}")]
pub struct TransportError(pub String);

pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<Response, TransportError>;
}

/// Largest response body accepted. Some full-submission text files are big.
const MAX_BODY: u64 = 512 * 1024 * 1024;

/// Plain HTTPS with the identifying User-Agent header required by the archive.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(user_agent: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .user_agent(user_agent)
            .build()
            .into();
        HttpTransport { agent }
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<Response, TransportError> {
        let mut resp = self
            .agent
            .get(url)
            .call()
            .map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(MAX_BODY)
            .read_to_vec()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(Response { status, body })
    }
}

/// Serves `https://host/path` from `root/host/path`. Missing files are 404s.
/// Used for offline runs against a copied or synthetic archive tree.
#[derive(Debug, Clone)]
pub struct MirrorTransport {
    root: PathBuf,
}

impl MirrorTransport {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        MirrorTransport { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Local path for `url`, or None when the url has no host/path shape
    /// or tries to climb out of the root.
    pub fn path_for(&self, url: &str) -> Option<PathBuf> {
        let rest = url
            .strip_prefix("https://")
            .or_else(|| url.strip_prefix("http://"))?;
        let rest = rest.split(['?', '#']).next().unwrap_or(rest);
        let mut path = self.root.clone();
        for part in rest.split('/') {
            if part.is_empty() || part == "." || part == ".." {
                if part == ".." {
                    return None;
                }
                continue;
            }
            path.push(part);
        }
        Some(path)
    }
}

impl Transport for MirrorTransport {
    fn get(&self, url: &str) -> Result<Response, TransportError> {
        let Some(path) = self.path_for(url) else {
            return Ok(Response::status(400));
        };
        match std::fs::read(&path) {
            Ok(body) => Ok(Response::ok(body)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Response::status(404)),
            Err(e) if path.is_dir() => {
                tracing::debug!(path = %path.display(), error = %e, "mirror path is a directory");
                Ok(Response::status(404))
            }
            Err(e) => Err(TransportError(format!("{}: {e}", path.display()))),
        }
    }
}
