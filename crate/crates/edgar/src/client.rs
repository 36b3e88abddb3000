//! The crawler facade: listing, fetching, throttling, retries and caching.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use tenkscan_core::analytics::assign_reporting_year;
use tenkscan_core::{AccessionNumber, ContentKind, FilingRef, RawFiling};
use tracing::{debug, info, warn};

use crate::cache::{sha256_hex, CacheMeta, FilingCache};
use crate::index::{parse_form_index, parse_submissions, parse_submissions_page, CompanySubmissions, IndexRow, IndexWarning};
use crate::limiter::{Clock, RateLimiter, SystemClock};
use crate::transport::{HttpTransport, Transport};
use crate::EdgarError;

pub const DEFAULT_ARCHIVE_BASE: &str = "https://www.sec.gov/Archives/edgar";
pub const DEFAULT_DATA_BASE: &str = "https://data.sec.gov";
pub const CONTACT_ENV: &str = "SEC_CONTACT";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgarConfig {
    /// Identifying contact sent with every request, e.g. "Jane Doe jane@example.org".
    pub contact: String,
    pub archive_base: String,
    pub data_base: String,
    pub max_per_second: usize,
    pub timeout: Duration,
}

impl EdgarConfig {
    pub fn new(contact: impl Into<String>) -> Result<Self, EdgarError> {
        let contact = contact.into();
        if contact.trim().is_empty() {
            return Err(EdgarError::MissingContact);
        }
        Ok(EdgarConfig {
            contact: contact.trim().to_string(),
            archive_base: DEFAULT_ARCHIVE_BASE.into(),
            data_base: DEFAULT_DATA_BASE.into(),
            max_per_second: 8,
            timeout: Duration::from_secs(60),
        })
    }

    /// Read the contact from `SEC_CONTACT`.
    pub fn from_env() -> Result<Self, EdgarError> {
        Self::new(std::env::var(CONTACT_ENV).unwrap_or_default())
    }

    pub fn user_agent(&self) -> String {
        format!("tenkscan/{} {}", env!("CARGO_PKG_VERSION"), self.contact)
    }
}

/// Bounded exponential backoff for 5xx, 429 and transport failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 1u32.checked_shl(retry.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestLogEntry {
    pub url: String,
    pub attempt: u32,
    pub status: Option<u16>,
    pub error: Option<String>,
    /// Clock reading when the request was sent.
    pub at: Duration,
}

/// What to list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListRequest {
    /// Reporting years, inclusive.
    pub years: RangeInclusive<i32>,
    /// Accepted form types, matched exactly. Normally just "10-K".
    pub forms: BTreeSet<String>,
    pub ciks: Option<BTreeSet<u64>>,
}

impl ListRequest {
    pub fn new(years: RangeInclusive<i32>) -> Self {
        ListRequest { years, forms: BTreeSet::from(["10-K".to_string()]), ciks: None }
    }

    pub fn validate(&self) -> Result<(), EdgarError> {
        if self.years.is_empty() {
            return Err(EdgarError::Request(format!(
                "year range {}..{} is empty",
                self.years.start(),
                self.years.end()
            )));
        }
        if self.forms.is_empty() || self.forms.iter().any(|f| f.trim().is_empty()) {
            return Err(EdgarError::Request("form type is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Listing {
    pub filings: Vec<FilingRef>,
    pub warnings: Vec<IndexWarning>,
}

pub struct EdgarClient {
    config: EdgarConfig,
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    limiter: RateLimiter,
    retry: RetryPolicy,
    cache: FilingCache,
    log: Mutex<Vec<RequestLogEntry>>,
}

impl EdgarClient {
    /// A client that talks HTTPS to the real archive.
    pub fn http(config: EdgarConfig, cache: FilingCache) -> Self {
        let transport = Arc::new(HttpTransport::new(&config.user_agent(), config.timeout));
        Self::with_parts(config, cache, transport, Arc::new(SystemClock::default()))
    }

    pub fn with_parts(
        config: EdgarConfig,
        cache: FilingCache,
        transport: Arc<dyn Transport>,
        clock: Arc<dyn Clock>,
    ) -> Self {
        let limiter = RateLimiter::new(config.max_per_second);
        EdgarClient {
            config,
            transport,
            clock,
            limiter,
            retry: RetryPolicy::default(),
            cache,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn config(&self) -> &EdgarConfig {
        &self.config
    }

    pub fn cache(&self) -> &FilingCache {
        &self.cache
    }

    pub fn request_log(&self) -> Vec<RequestLogEntry> {
        self.log.lock().unwrap().clone()
    }

    /// Number of requests that went to the transport.
    pub fn network_requests(&self) -> usize {
        self.log.lock().unwrap().len()
    }

    /// Requests that returned a body (2xx).
    pub fn downloads(&self) -> usize {
        self.log
            .lock()
            .unwrap()
            .iter()
            .filter(|e| e.status.is_some_and(|s| (200..300).contains(&s)))
            .count()
    }

    /// Throttled GET with retries. 2xx bodies are returned; 4xx other than
    /// 429 fail at once.
    pub fn get(&self, url: &str) -> Result<Vec<u8>, EdgarError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            let permit = self.limiter.acquire(self.clock.as_ref());
            let result = self.transport.get(url);
            let (status, error) = match &result {
                Ok(r) => (Some(r.status), None),
                Err(e) => (None, Some(e.to_string())),
            };
            self.log.lock().unwrap().push(RequestLogEntry {
                url: url.to_string(),
                attempt,
                status,
                error: error.clone(),
                at: permit.issued_at,
            });
            let reason = match result {
                Ok(r) if (200..300).contains(&r.status) => {
                    debug!(url, attempt, bytes = r.body.len(), "fetched");
                    return Ok(r.body);
                }
                Ok(r) if r.status == 429 || r.status >= 500 => format!("HTTP {}", r.status),
                Ok(r) => return Err(EdgarError::Permanent { url: url.to_string(), status: r.status }),
                Err(e) => e.0,
            };
            if attempt >= self.retry.max_attempts {
                return Err(EdgarError::Retriable { url: url.to_string(), attempts: attempt, reason });
            }
            let delay = self.retry.delay(attempt);
            warn!(url, attempt, %reason, ?delay, "request failed, backing off");
            self.clock.sleep(delay);
        }
    }

    /// GET through the index cache. Used for index and listing files, which
    /// are treated as frozen once fetched so that a crawl is reproducible.
    fn get_cached_index(&self, url: &str) -> Result<Vec<u8>, EdgarError> {
        if let Some(hit) = self.cache.get_index(url).map_err(EdgarError::Cache)? {
            return Ok(hit.body);
        }
        let body = self.get(url)?;
        let meta = CacheMeta {
            sha256: sha256_hex(&body),
            url: url.to_string(),
            retrieved_at: Utc::now(),
            content_kind: None,
            filing: None,
        };
        self.cache.put_index(url, &body, &meta).map_err(EdgarError::Cache)?;
        Ok(body)
    }

    pub fn form_index_url(&self, year: i32, quarter: u8) -> String {
        format!("{}/full-index/{year}/QTR{quarter}/form.idx", self.config.archive_base)
    }

    pub fn submissions_url(&self, cik: u64) -> String {
        format!("{}/submissions/CIK{cik:010}.json", self.config.data_base)
    }

    fn submissions_page_url(&self, name: &str) -> String {
        format!("{}/submissions/{name}", self.config.data_base)
    }

    /// Where the primary document of `filing` lives. Without a known primary
    /// document the full submission text file is used.
    pub fn document_url(&self, filing: &FilingRef) -> String {
        let acc = &filing.accession_number;
        match &filing.primary_document {
            Some(doc) => format!("{}/data/{}/{}/{doc}", self.config.archive_base, filing.cik, acc.compact()),
            None => format!("{}/data/{}/{acc}.txt", self.config.archive_base, filing.cik),
        }
    }

    /// Every filing of the requested forms whose reporting year is in range.
    /// Quarterly indices of filing years `start..=end+1` are read, since a
    /// fiscal year is usually filed in the following calendar year.
    pub fn list_filings(&self, req: &ListRequest) -> Result<Listing, EdgarError> {
        req.validate()?;
        let mut warnings = Vec::new();
        let mut rows: BTreeMap<AccessionNumber, IndexRow> = BTreeMap::new();
        for year in *req.years.start()..=*req.years.end() + 1 {
            for quarter in 1..=4u8 {
                let url = self.form_index_url(year, quarter);
                let body = match self.get_cached_index(&url) {
                    Ok(b) => b,
                    Err(EdgarError::Permanent { status: 404, .. }) => {
                        debug!(url, "quarterly index not published");
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let text = String::from_utf8_lossy(&body);
                let parsed = parse_form_index(&url, &text);
                warnings.extend(parsed.warnings);
                for row in parsed.rows {
                    if !req.forms.contains(&row.form_type) {
                        continue;
                    }
                    if req.ciks.as_ref().is_some_and(|c| !c.contains(&row.cik)) {
                        continue;
                    }
                    rows.entry(row.accession_number.clone()).or_insert(row);
                }
            }
        }

        let ciks: BTreeSet<u64> = rows.values().map(|r| r.cik).collect();
        let mut companies = BTreeMap::new();
        for cik in ciks {
            let needed: Vec<&AccessionNumber> = rows.values().filter(|r| r.cik == cik).map(|r| &r.accession_number).collect();
            match self.company(cik, &needed) {
                Ok(c) => {
                    companies.insert(cik, c);
                }
                Err(EdgarError::Permanent { url, status }) => warnings.push(IndexWarning {
                    source: url,
                    line: 0,
                    reason: format!("submissions listing unavailable (HTTP {status}); using index fields only"),
                    raw: String::new(),
                }),
                Err(e) => return Err(e),
            }
        }

        let mut filings = Vec::new();
        for row in rows.into_values() {
            let filing = merge(&row, companies.get(&row.cik));
            if let Err(e) = filing.validate() {
                warnings.push(IndexWarning {
                    source: "merge".into(),
                    line: 0,
                    reason: format!("{}: {e}", row.accession_number),
                    raw: String::new(),
                });
                continue;
            }
            if req.years.contains(&assign_reporting_year(&filing).year) {
                filings.push(filing);
            }
        }
        filings.sort_by(|a, b| (a.cik, &a.accession_number).cmp(&(b.cik, &b.accession_number)));
        for w in &warnings {
            warn!(source = %w.source, line = w.line, reason = %w.reason, "skipped index entry");
        }
        info!(filings = filings.len(), warnings = warnings.len(), "listing complete");
        Ok(Listing { filings, warnings })
    }

    fn company(&self, cik: u64, needed: &[&AccessionNumber]) -> Result<CompanySubmissions, EdgarError> {
        let url = self.submissions_url(cik);
        let body = self.get_cached_index(&url)?;
        let mut company = parse_submissions(cik, &body).map_err(|e| EdgarError::Listing { url: url.clone(), message: e.to_string() })?;
        let mut pages = company.extra_pages.clone().into_iter();
        while needed.iter().any(|a| !company.filings.contains_key(*a)) {
            let Some(page) = pages.next() else { break };
            let url = self.submissions_page_url(&page);
            let body = self.get_cached_index(&url)?;
            let older = parse_submissions_page(&body).map_err(|e| EdgarError::Listing { url, message: e.to_string() })?;
            for (acc, entry) in older {
                company.filings.entry(acc).or_insert(entry);
            }
        }
        Ok(company)
    }

    /// Primary document of `filing`, from cache when possible.
    pub fn fetch_filing(&self, filing: &FilingRef) -> Result<RawFiling, EdgarError> {
        filing.validate().map_err(|e| EdgarError::Request(e.to_string()))?;
        let acc = filing.accession_number.as_str();
        if let Some(hit) = self.cache.get_filing(acc).map_err(EdgarError::Cache)? {
            debug!(accession = acc, "cache hit");
            return Ok(RawFiling {
                filing: filing.clone(),
                content_kind: hit.meta.content_kind.unwrap_or(ContentKind::Html),
                content: hit.body,
                retrieved_at: hit.meta.retrieved_at,
                source_url: hit.meta.url,
            });
        }
        let url = self.document_url(filing);
        let content = self.get(&url)?;
        if content.is_empty() {
            return Err(EdgarError::EmptyDocument { url });
        }
        let content_kind = match &filing.primary_document {
            Some(doc) => ContentKind::from_document_name(doc),
            None => ContentKind::PlainText,
        };
        let meta = CacheMeta {
            sha256: sha256_hex(&content),
            url: url.clone(),
            retrieved_at: Utc::now(),
            content_kind: Some(content_kind),
            filing: Some(filing.clone()),
        };
        self.cache.put_filing(acc, &content, &meta).map_err(EdgarError::Cache)?;
        Ok(RawFiling {
            filing: filing.clone(),
            content,
            content_kind,
            retrieved_at: meta.retrieved_at,
            source_url: url,
        })
    }
}

/// Combine an index row with the company listing. The listing wins for
/// name, SIC, period and document; the index row is the fallback.
fn merge(row: &IndexRow, company: Option<&CompanySubmissions>) -> FilingRef {
    let entry = company.and_then(|c| c.filings.get(&row.accession_number));
    let name = company
        .map(|c| c.name.trim())
        .filter(|n| !n.is_empty())
        .unwrap_or(&row.company_name);
    FilingRef {
        cik: row.cik,
        accession_number: row.accession_number.clone(),
        form_type: row.form_type.clone(),
        filing_date: entry.and_then(|e| e.filing_date).unwrap_or(row.date_filed),
        period_end: entry.and_then(|e| e.report_date),
        company_name: name.to_string(),
        sic: company.and_then(|c| c.sic.clone()),
        primary_document: entry.and_then(|e| e.primary_document.clone()),
    }
}

/// Date a crawl was taken, recorded in manifests.
pub fn today() -> NaiveDate {
    Utc::now().date_naive()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_is_bounded() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay(1), Duration::from_millis(500));
        assert_eq!(p.delay(2), Duration::from_secs(1));
        assert_eq!(p.delay(4), Duration::from_secs(4));
        assert_eq!(p.delay(10), Duration::from_secs(30));
        assert_eq!(p.delay(40), Duration::from_secs(30));
    }

    #[test]
    fn blank_contact_refused() {
        assert!(matches!(EdgarConfig::new("  "), Err(EdgarError::MissingContact)));
        let c = EdgarConfig::new("Jo Doe jo@example.org").unwrap();
        assert!(c.user_agent().ends_with("jo@example.org"));
    }
}
