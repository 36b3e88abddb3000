//! Client for the SEC EDGAR archive: discovers 10-K filings from the quarterly
//! form indices and per-company submission listings, downloads primary
//! documents through a shared rate limiter and keeps them in a checksummed
//! on-disk cache.

pub mod cache;
pub mod client;
pub mod index;
pub mod limiter;
pub mod manifest;
pub mod transport;

use thiserror::Error;

pub use cache::{CacheEntry, CacheMeta, FilingCache};
pub use client::{EdgarClient, EdgarConfig, ListRequest, Listing, RequestLogEntry, RetryPolicy, CONTACT_ENV};
pub use index::{IndexRow, IndexWarning};
pub use limiter::{Clock, ManualClock, Permit, RateLimiter, SystemClock};
pub use manifest::{Manifest, ManifestEntry};
pub use transport::{HttpTransport, MirrorTransport, Response, Transport, TransportError};

#[derive(Debug, Error)]
pub enum EdgarError {
    #[error("no contact configured: set SEC_CONTACT to a name and email address")]
    MissingContact,
    #[error("invalid request: {0}")]
    Request(String),
    /// 4xx: retrying will not help.
    #[error("{url}: HTTP {status}")]
    Permanent { url: String, status: u16 },
    /// 5xx, 429 or a transport failure that outlasted the retry budget.
    #[error("{url}: {reason} (gave up after {attempts} attempts)")]
    Retriable { url: String, attempts: u32, reason: String },
    #[error("{url}: empty document")]
    EmptyDocument { url: String },
    #[error("{url}: unreadable listing: {message}")]
    Listing { url: String, message: String },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("cache: {0}")]
    Cache(#[source] std::io::Error),
}

impl EdgarError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, EdgarError::Retriable { .. })
    }

    pub fn url(&self) -> Option<&str> {
        match self {
            EdgarError::Permanent { url, .. }
            | EdgarError::Retriable { url, .. }
            | EdgarError::EmptyDocument { url }
            | EdgarError::Listing { url, .. } => Some(url),
            _ => None,
        }
    }
}
