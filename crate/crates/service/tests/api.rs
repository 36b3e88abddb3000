use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use chrono::NaiveDate;
use http_body_util::BodyExt;
use serde_json::Value;
use tenkscan_core::analytics::{CorpusFiling, Metric, Scope};
use tenkscan_core::extraction::{default_ai_keywords, scan, KeywordSet, SectionSelection};
use tenkscan_core::parser::{FilingSection, ParsedFiling};
use tenkscan_core::query::{Snapshot, StatsQuery};
use tenkscan_core::store::{self, RecordBatch, StoreMeta};
use tenkscan_core::{FilingRef, ItemId};
use tenkscan_service::{router, AppState};
use tower::ServiceExt;

fn parsed(cik: u64, year: i32, name: &str, sic: &str, business: &str, risk: &str) -> ParsedFiling {
    let filing = FilingRef {
        cik,
        accession_number: format!("{cik:010}-{:02}-000001", (year + 1) % 100).parse().unwrap(),
        form_type: "10-K".into(),
        filing_date: NaiveDate::from_ymd_opt(year + 1, 2, 1).unwrap(),
        period_end: NaiveDate::from_ymd_opt(year, 12, 31),
        company_name: name.into(),
        sic: Some(sic.into()),
        primary_document: None,
    };
    let head1 = "Item 1. Business\n";
    let head2 = "Item 1A. Risk Factors\n";
    let text = format!("{head1}{business}\n{head2}{risk}");
    let split = head1.chars().count() + business.chars().count() + 1;
    let len = text.chars().count();
    ParsedFiling {
        filing,
        text,
        sections: vec![
            FilingSection { item_id: ItemId::Item1, title: "Business".into(), start: 0, end: split },
            FilingSection { item_id: ItemId::Item1A, title: "Risk Factors".into(), start: split, end: len },
        ],
    }
}

fn batch() -> RecordBatch {
    let docs = [
        parsed(1, 2024, "Alpha Corp", "7372", "We build AI tools. We sell software.", "AI may fail. Machine learning is costly."),
        parsed(2, 2024, "Beta Bank", "6022", "We lend money.", "Generative AI could disrupt banking, and AI, AI again."),
        parsed(3, 2023, "Gamma Inc", "7372", "Our chatbot answers calls.", "Competition is intense."),
        parsed(4, 2024, "Delta LLC", "2834", "We make drugs.", "Supply risks exist."),
    ];
    let ks = KeywordSet::default_ai();
    let mut batch = RecordBatch {
        meta: Some(StoreMeta { keywords: default_ai_keywords(), sections: SectionSelection::All, seed: None }),
        ..Default::default()
    };
    for d in &docs {
        let out = scan(d, &ks, &SectionSelection::All);
        batch.filings.push(CorpusFiling {
            filing: d.filing.clone(),
            sections_present: d.sections.iter().map(|s| s.item_id).collect(),
        });
        batch.matches.extend(out.matches);
        batch.sentences.extend(out.sentences);
    }
    batch
}

fn app() -> Router {
    router(AppState::new(Snapshot::new(batch()).unwrap()), None)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let resp = app.clone().oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, headers, body)
}

async fn post(app: &Router, uri: &str, json: &str) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let req = Request::post(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(json.to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, headers, body)
}

fn json(body: &[u8]) -> Value {
    serde_json::from_slice(body).unwrap()
}

#[tokio::test]
async fn search_returns_exactly_the_item_1a_records() {
    let app = app();
    let (status, _, body) = get(&app, "/api/search?keywords=ai&years=2024&sections=1A").await;
    assert_eq!(status, StatusCode::OK);
    let v = json(&body);
    assert_eq!(v["total"], 2);
    let texts: Vec<&str> = v["hits"].as_array().unwrap().iter().map(|h| h["sentence_text"].as_str().unwrap()).collect();
    assert_eq!(texts, ["AI may fail.", "Generative AI could disrupt banking, and AI, AI again."]);
    for h in v["hits"].as_array().unwrap() {
        assert_eq!(h["section_item"], "1A");
        let text: Vec<char> = h["sentence_text"].as_str().unwrap().chars().collect();
        for span in h["highlights"].as_array().unwrap() {
            let (s, e) = (span["start"].as_u64().unwrap() as usize, span["end"].as_u64().unwrap() as usize);
            assert_eq!(text[s..e].iter().collect::<String>(), "AI");
        }
    }
    assert_eq!(v["hits"][1]["highlights"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn page_past_the_end_is_empty_with_same_total() {
    let app = app();
    let (_, _, first) = get(&app, "/api/search?page_size=2").await;
    let (status, _, far) = get(&app, "/api/search?page_size=2&page=99").await;
    assert_eq!(status, StatusCode::OK);
    let (first, far) = (json(&first), json(&far));
    assert_eq!(far["total"], first["total"]);
    assert!(far["hits"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn invalid_pattern_is_a_400_with_diagnostics() {
    let (status, _, body) = get(&app(), "/api/search?pattern=(").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let v = json(&body);
    assert_eq!(v["error"]["code"], "invalid_pattern");
    assert_eq!(v["error"]["pattern"]["id"], "q1");
    assert!(!v["error"]["pattern"]["message"].as_str().unwrap().is_empty());
}

#[tokio::test]
async fn bad_parameters_are_400s() {
    let app = app();
    for uri in [
        "/api/search?page_size=501",
        "/api/search?page=0",
        "/api/search?keywords=nope",
        "/api/search?years=2024..2020",
        "/api/search?colour=red",
        "/api/stats?metric=bogus",
        "/api/stats?scope=everything",
        "/api/stats?format=pdf",
    ] {
        let (status, _, _) = get(&app, uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
    }
}

#[tokio::test]
async fn stats_match_the_analytics_layer() {
    let app = app();
    let (status, _, body) = get(&app, "/api/stats?metric=pct&scope=risk").await;
    assert_eq!(status, StatusCode::OK);
    let v = json(&body);
    let snap = Snapshot::new(batch()).unwrap();
    let expected = snap
        .stats(&StatsQuery { metric: Metric::PctCompanies, scope: Some(Scope::Risk), ..Default::default() })
        .unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), expected.len());
    for (r, e) in rows.iter().zip(&expected) {
        assert_eq!(r["year"].as_i64().unwrap() as i32, e.year);
        assert_eq!(r["value"].as_f64().unwrap(), e.value);
    }
    // 2 of the 3 filers of 2024 mention AI in Item 1A
    let y2024 = rows.iter().find(|r| r["year"] == 2024).unwrap();
    assert!((y2024["value"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);

    let (_, h, csv) = get(&app, "/api/stats?metric=pct&scope=risk&format=csv").await;
    assert!(h[header::CONTENT_TYPE].to_str().unwrap().starts_with("text/csv"));
    assert!(String::from_utf8(csv).unwrap().starts_with("year,scope,sic_group,metric,value\r\n"));
}

#[tokio::test]
async fn empty_result_exports_header_only() {
    let (status, headers, body) = post(&app(), "/api/export", r#"{"companies":["No Such Company"],"format":"csv"}"#).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, tenkscan_core::export::csv_bytes(&[]));
    assert!(headers[header::CONTENT_DISPOSITION].to_str().unwrap().contains("matches.csv"));
}

#[tokio::test]
async fn export_matches_core_export() {
    let (status, _, body) = post(&app(), "/api/export", r#"{"keywords":["ai"],"sections":["1A"]}"#).await;
    assert_eq!(status, StatusCode::OK);
    let snap = Snapshot::new(batch()).unwrap();
    let q = tenkscan_core::query::SearchQuery {
        keywords: vec!["ai".into()],
        sections: vec![ItemId::Item1A],
        ..Default::default()
    };
    assert_eq!(body, tenkscan_core::export::csv_bytes(&snap.export(&q).unwrap()));
    let (status, headers, xlsx) = post(&app(), "/api/export", r#"{"format":"xlsx"}"#).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(&xlsx[..2], b"PK");
    assert!(headers[header::CONTENT_TYPE].to_str().unwrap().contains("spreadsheetml"));
}

#[tokio::test]
async fn malformed_export_body_is_400() {
    let (status, _, _) = post(&app(), "/api/export", r#"{"format":"pdf"}"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = post(&app(), "/api/export", "not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn absent_or_empty_store_is_503() {
    let absent = router(AppState::absent(), None);
    let empty = router(AppState::new(Snapshot::new(RecordBatch::default()).unwrap()), None);
    for app in [&absent, &empty] {
        for uri in ["/api/stats?metric=pct", "/api/search", "/api/meta"] {
            assert_eq!(get(app, uri).await.0, StatusCode::SERVICE_UNAVAILABLE, "{uri}");
        }
        assert_eq!(post(app, "/api/export", "{}").await.0, StatusCode::SERVICE_UNAVAILABLE);
        assert_eq!(get(app, "/api/health").await.0, StatusCode::OK);
    }
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::load(&dir.path().join("missing.jsonl")).unwrap();
    assert_eq!(get(&router(state, None), "/api/search").await.0, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn repeated_requests_are_identical_and_revalidate() {
    let app = app();
    let (_, h1, b1) = get(&app, "/api/search?keywords=ai").await;
    let (_, h2, b2) = get(&app, "/api/search?keywords=ai").await;
    assert_eq!(b1, b2);
    let etag = h1[header::ETAG].to_str().unwrap().to_string();
    assert_eq!(etag, h2[header::ETAG].to_str().unwrap());
    assert!(etag.starts_with('"') && !etag.starts_with("W/"));

    let req = Request::get("/api/search?keywords=ai")
        .header(header::IF_NONE_MATCH, &etag)
        .body(Body::empty())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::NOT_MODIFIED);
    assert!(resp.into_body().collect().await.unwrap().to_bytes().is_empty());
}

#[tokio::test]
async fn cors_allows_the_ui_origin() {
    let req = Request::get("/api/meta")
        .header(header::ORIGIN, "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let resp = app().oneshot(req).await.unwrap();
    assert_eq!(resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "*");

    let only = router(
        AppState::new(Snapshot::new(batch()).unwrap()),
        Some(vec!["http://ui.example".parse().unwrap()]),
    );
    let req = Request::get("/api/meta").header(header::ORIGIN, "http://ui.example").body(Body::empty()).unwrap();
    let resp = only.oneshot(req).await.unwrap();
    assert_eq!(resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "http://ui.example");
}

#[tokio::test]
async fn loads_a_persisted_store_and_serves_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.jsonl");
    store::persist(&path, &batch()).unwrap();
    let app = router(AppState::load(&path).unwrap(), None);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(tenkscan_service::serve(listener, app));

    let text = tokio::task::spawn_blocking(move || {
        use std::io::{Read, Write};
        let mut s = std::net::TcpStream::connect(addr).unwrap();
        write!(s, "GET /api/meta HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").unwrap();
        let mut out = String::new();
        s.read_to_string(&mut out).unwrap();
        out
    })
    .await
    .unwrap();
    assert!(text.starts_with("HTTP/1.1 200"), "{text}");
    assert!(text.contains("\"filings\":4"));
}
