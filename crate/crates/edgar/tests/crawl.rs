use std::collections::{BTreeSet, VecDeque};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use tenkscan_core::ContentKind;
use tenkscan_edgar::{
    EdgarClient, EdgarConfig, EdgarError, FilingCache, ListRequest, ManualClock, MirrorTransport, Response,
    Transport, TransportError,
};

fn mirror() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mirror")
}

fn config() -> EdgarConfig {
    EdgarConfig::new("Test Runner test@example.org").unwrap()
}

fn mirror_client(cache: &std::path::Path) -> EdgarClient {
    EdgarClient::with_parts(
        config(),
        FilingCache::new(cache),
        Arc::new(MirrorTransport::new(mirror())),
        Arc::new(ManualClock::new()),
    )
}

/// Replays canned responses in order and counts calls.
struct Scripted {
    replies: Mutex<VecDeque<Result<Response, TransportError>>>,
    calls: Mutex<Vec<String>>,
}

impl Scripted {
    fn new(replies: Vec<Result<Response, TransportError>>) -> Arc<Self> {
        Arc::new(Scripted { replies: Mutex::new(replies.into()), calls: Mutex::new(Vec::new()) })
    }
}

impl Transport for Scripted {
    fn get(&self, url: &str) -> Result<Response, TransportError> {
        self.calls.lock().unwrap().push(url.to_string());
        self.replies.lock().unwrap().pop_front().unwrap_or(Ok(Response::status(500)))
    }
}

fn scripted_client(t: Arc<Scripted>, cache: &std::path::Path) -> (EdgarClient, Arc<ManualClock>) {
    let clock = Arc::new(ManualClock::new());
    let c = EdgarClient::with_parts(config(), FilingCache::new(cache), t, clock.clone());
    (c, clock)
}

fn some_filing() -> tenkscan_core::FilingRef {
    tenkscan_core::FilingRef {
        cik: 1000001,
        accession_number: "0001000001-25-000004".parse().unwrap(),
        form_type: "10-K".into(),
        filing_date: chrono::NaiveDate::from_ymd_opt(2025, 2, 20).unwrap(),
        period_end: chrono::NaiveDate::from_ymd_opt(2024, 12, 31),
        company_name: "Alpha Analytics Inc.".into(),
        sic: Some("7372".into()),
        primary_document: Some("alpha-20241231.htm".into()),
    }
}

#[test]
fn two_refs_for_two_ciks_in_2024() {
    let cache = tempfile::tempdir().unwrap();
    let client = mirror_client(cache.path());
    let mut req = ListRequest::new(2024..=2024);
    req.ciks = Some(BTreeSet::from([1000001, 1000002]));
    let listing = client.list_filings(&req).unwrap();
    let accs: Vec<_> = listing.filings.iter().map(|f| f.accession_number.as_str()).collect();
    assert_eq!(accs, ["0001000001-25-000004", "0001000002-25-000011"]);
    let alpha = &listing.filings[0];
    assert_eq!(alpha.company_name, "Alpha Analytics Inc.");
    assert_eq!(alpha.sic.as_deref(), Some("7372"));
    assert_eq!(alpha.primary_document.as_deref(), Some("alpha-20241231.htm"));
    // the row without a filing date
    assert_eq!(listing.warnings.len(), 1);
    assert_eq!(listing.warnings[0].line, 15);
}

#[test]
fn reporting_year_decides_membership() {
    let cache = tempfile::tempdir().unwrap();
    let client = mirror_client(cache.path());
    let all_2024 = client.list_filings(&ListRequest::new(2024..=2024)).unwrap();
    let accs: Vec<_> = all_2024.filings.iter().map(|f| f.accession_number.as_str()).collect();
    // Gamma's June 2025 fiscal year counts as 2024; its June 2024 one as 2023.
    assert_eq!(accs, ["0001000001-25-000004", "0001000002-25-000011", "0001000003-25-000008"]);

    let y2023 = client.list_filings(&ListRequest::new(2023..=2023)).unwrap();
    assert_eq!(y2023.filings.len(), 1);
    let gamma = &y2023.filings[0];
    assert_eq!(gamma.accession_number.as_str(), "0001000003-24-000007");
    // only reachable through the older listing page
    assert_eq!(gamma.period_end, chrono::NaiveDate::from_ymd_opt(2024, 6, 30));
}

#[test]
fn amendments_only_when_widened() {
    let cache = tempfile::tempdir().unwrap();
    let client = mirror_client(cache.path());
    let mut req = ListRequest::new(2024..=2024);
    req.forms.insert("10-K/A".into());
    let listing = client.list_filings(&req).unwrap();
    assert_eq!(listing.filings.len(), 4);
    assert!(listing.filings.iter().any(|f| f.form_type == "10-K/A"));
}

#[test]
fn empty_index_gives_empty_listing() {
    let empty = tempfile::tempdir().unwrap();
    let cache = tempfile::tempdir().unwrap();
    let client = EdgarClient::with_parts(
        config(),
        FilingCache::new(cache.path()),
        Arc::new(MirrorTransport::new(empty.path())),
        Arc::new(ManualClock::new()),
    );
    let listing = client.list_filings(&ListRequest::new(2024..=2024)).unwrap();
    assert!(listing.filings.is_empty());
    assert!(listing.warnings.is_empty());
}

#[test]
fn bad_requests_rejected() {
    let cache = tempfile::tempdir().unwrap();
    let client = mirror_client(cache.path());
    #[allow(clippy::reversed_empty_ranges)]
    let backwards = ListRequest::new(2025..=2024);
    assert!(matches!(client.list_filings(&backwards), Err(EdgarError::Request(_))));
    let mut blank = ListRequest::new(2024..=2024);
    blank.forms = BTreeSet::from([String::new()]);
    assert!(matches!(client.list_filings(&blank), Err(EdgarError::Request(_))));
}

#[test]
fn crawl_is_idempotent() {
    let cache = tempfile::tempdir().unwrap();
    let first = mirror_client(cache.path());
    let listing = first.list_filings(&ListRequest::new(2024..=2024)).unwrap();
    let raws: Vec<_> = listing.filings.iter().map(|f| first.fetch_filing(f).unwrap()).collect();
    assert!(first.network_requests() > 0);
    let snapshot = |dir: &std::path::Path| {
        FilingCache::new(dir)
            .files()
            .unwrap()
            .into_iter()
            .map(|p| (p.clone(), std::fs::read(&p).unwrap()))
            .collect::<Vec<_>>()
    };
    let before = snapshot(cache.path());

    let second = mirror_client(cache.path());
    let again = second.list_filings(&ListRequest::new(2024..=2024)).unwrap();
    assert_eq!(again, listing);
    for (f, raw) in again.filings.iter().zip(&raws) {
        let r = second.fetch_filing(f).unwrap();
        assert_eq!(r.content, raw.content);
        assert_eq!(r.content_kind, ContentKind::Html);
    }
    // Only probes for unpublished quarters go out; nothing is downloaded.
    assert_eq!(second.downloads(), 0);
    assert!(second.request_log().iter().all(|e| e.status == Some(404)));
    assert_eq!(snapshot(cache.path()), before);
}

#[test]
fn fetch_twice_one_request() {
    let cache = tempfile::tempdir().unwrap();
    let t = Scripted::new(vec![Ok(Response::ok(b"<p>doc</p>".to_vec()))]);
    let (client, _) = scripted_client(t.clone(), cache.path());
    let a = client.fetch_filing(&some_filing()).unwrap();
    let b = client.fetch_filing(&some_filing()).unwrap();
    assert_eq!(a.content, b.content);
    assert_eq!(t.calls.lock().unwrap().len(), 1);
    assert_eq!(
        a.source_url,
        "https://www.sec.gov/Archives/edgar/data/1000001/000100000125000004/alpha-20241231.htm"
    );
}

#[test]
fn retry_503_then_200() {
    let cache = tempfile::tempdir().unwrap();
    let t = Scripted::new(vec![Ok(Response::status(503)), Ok(Response::ok(b"body".to_vec()))]);
    let (client, clock) = scripted_client(t, cache.path());
    let raw = client.fetch_filing(&some_filing()).unwrap();
    assert_eq!(raw.content, b"body");
    let log = client.request_log();
    assert_eq!(log.len(), 2);
    assert_eq!(log[0].status, Some(503));
    assert_eq!(log[1].status, Some(200));
    assert_eq!(log[1].attempt, 2);
    // waited out the first backoff step
    use tenkscan_edgar::Clock;
    assert!(clock.now() >= Duration::from_millis(500));
}

#[test]
fn not_found_is_permanent_and_uncached() {
    let cache = tempfile::tempdir().unwrap();
    let t = Scripted::new(vec![Ok(Response::status(404))]);
    let (client, _) = scripted_client(t.clone(), cache.path());
    let err = client.fetch_filing(&some_filing()).unwrap_err();
    assert!(matches!(err, EdgarError::Permanent { status: 404, .. }));
    assert!(!err.is_retriable());
    assert_eq!(t.calls.lock().unwrap().len(), 1);
    assert!(client.cache().files().unwrap().is_empty());
}

#[test]
fn persistent_failure_is_retriable_with_url() {
    let cache = tempfile::tempdir().unwrap();
    let t = Scripted::new(vec![
        Err(TransportError("connection reset".into())),
        Ok(Response::status(502)),
        Ok(Response::status(503)),
        Ok(Response::status(500)),
        Ok(Response::status(500)),
    ]);
    let (client, _) = scripted_client(t.clone(), cache.path());
    let err = client.fetch_filing(&some_filing()).unwrap_err();
    assert!(err.is_retriable());
    assert!(err.url().unwrap().ends_with("alpha-20241231.htm"));
    assert_eq!(t.calls.lock().unwrap().len(), 5);
    assert_eq!(client.request_log()[0].error.as_deref(), Some("connection reset"));
}

#[test]
fn corrupted_cache_refetches() {
    let cache = tempfile::tempdir().unwrap();
    let t = Scripted::new(vec![Ok(Response::ok(b"good".to_vec())), Ok(Response::ok(b"good".to_vec()))]);
    let (client, _) = scripted_client(t.clone(), cache.path());
    client.fetch_filing(&some_filing()).unwrap();
    std::fs::write(cache.path().join("filings/0001000001-25-000004.htm"), b"bad!").unwrap();
    let raw = client.fetch_filing(&some_filing()).unwrap();
    assert_eq!(raw.content, b"good");
    assert_eq!(t.calls.lock().unwrap().len(), 2);
}

#[test]
fn missing_contact_refuses_to_start() {
    assert!(matches!(EdgarConfig::new(""), Err(EdgarError::MissingContact)));
}
