//! Read-only JSON API over one corpus snapshot, chosen at startup.
//!
//! - `GET /api/health`
//! - `GET /api/meta`: keyword set, years, filing count
//! - `GET /api/search?keywords=ai&years=2024&sections=1A&page=1&page_size=50`
//! - `GET /api/stats?metric=pct&scope=risk[&years=..][&top_sic=N][&format=csv]`
//! - `POST /api/export` with a JSON search query plus `"format": "csv"|"xlsx"`
//!
//! Every 200 carries a strong ETag (sha-256 of the body) and honours
//! `If-None-Match`.

use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{RawQuery, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use tenkscan_core::export::{encode, ExportFormat};
use tenkscan_core::query::{stats_csv, QueryError, SearchQuery, Snapshot, StatsQuery};
use tenkscan_core::store::{self, RecordFilter, StoreError};
use thiserror::Error;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tracing::{info, warn};

pub use axum::http::HeaderValue as Origin;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no corpus store loaded")]
    StoreAbsent,
    #[error("corpus store is empty")]
    StoreEmpty,
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("export failed: {0}")]
    Export(String),
}

impl ServiceError {
    fn status(&self) -> StatusCode {
        match self {
            ServiceError::StoreAbsent | ServiceError::StoreEmpty | ServiceError::Query(QueryError::EmptyStore) => {
                StatusCode::SERVICE_UNAVAILABLE
            }
            ServiceError::Query(QueryError::Budget(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Query(_) | ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Export(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            ServiceError::StoreAbsent => "store_absent",
            ServiceError::StoreEmpty | ServiceError::Query(QueryError::EmptyStore) => "store_empty",
            ServiceError::Query(QueryError::Pattern { .. }) => "invalid_pattern",
            ServiceError::Query(QueryError::Budget(_)) => "budget_exceeded",
            ServiceError::Query(QueryError::UnknownKeyword(_)) => "unknown_keyword",
            ServiceError::Query(QueryError::Param { .. }) => "invalid_parameter",
            ServiceError::Query(_) | ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Export(_) => "export_failed",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": { "code": self.code(), "message": self.to_string() } });
        match &self {
            ServiceError::Query(QueryError::Pattern { id, message }) => {
                body["error"]["pattern"] = json!({ "id": id, "message": message });
            }
            ServiceError::Query(QueryError::Param { name, .. }) => {
                body["error"]["parameter"] = json!(name);
            }
            _ => {}
        }
        (self.status(), Json(body)).into_response()
    }
}

/// What the server answers from. `None` means no store could be read.
#[derive(Clone, Default)]
pub struct AppState {
    snapshot: Option<Arc<Snapshot>>,
}

impl AppState {
    pub fn new(snapshot: Snapshot) -> Self {
        AppState { snapshot: Some(Arc::new(snapshot)) }
    }

    pub fn absent() -> Self {
        AppState::default()
    }

    /// Load the store at `path`. A missing file yields an absent state so the
    /// server can still start and report 503; a corrupt one is an error.
    pub fn load(path: &Path) -> Result<Self, StoreError> {
        match store::load(path, &RecordFilter::all()) {
            Ok(batch) => {
                let snapshot = Snapshot::new(batch).map_err(|e| StoreError::Corrupt {
                    path: path.to_path_buf(),
                    line: 1,
                    message: e.to_string(),
                })?;
                info!(path = %path.display(), filings = snapshot.batch().filings.len(), "store loaded");
                Ok(AppState::new(snapshot))
            }
            Err(StoreError::Missing(p)) => {
                warn!(path = %p.display(), "store not found; serving 503 until restarted with a store");
                Ok(AppState::absent())
            }
            Err(e) => Err(e),
        }
    }

    fn snapshot(&self) -> Result<&Snapshot, ServiceError> {
        let s = self.snapshot.as_deref().ok_or(ServiceError::StoreAbsent)?;
        if s.is_empty() {
            return Err(ServiceError::StoreEmpty);
        }
        Ok(s)
    }
}

/// Allowed browser origins. `None` allows any origin, which suits a local,
/// read-only API.
pub fn router(state: AppState, cors_origins: Option<Vec<HeaderValue>>) -> Router {
    let allow = match cors_origins {
        Some(list) => AllowOrigin::list(list),
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([axum::http::Method::GET, axum::http::Method::POST])
        .allow_headers([header::CONTENT_TYPE, header::IF_NONE_MATCH])
        .expose_headers([header::ETAG, header::CONTENT_DISPOSITION]);
    Router::new()
        .route("/api/health", get(health))
        .route("/api/meta", get(meta))
        .route("/api/search", get(search))
        .route("/api/stats", get(stats))
        .route("/api/export", post(export))
        .layer(cors)
        .with_state(state)
}

/// Serve until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    info!(addr = ?listener.local_addr().ok(), "listening");
    axum::serve(listener, app).await
}

fn params(raw: &Option<String>) -> Vec<(String, String)> {
    raw.as_deref()
        .map(|q| form_urlencoded::parse(q.as_bytes()).into_owned().collect())
        .unwrap_or_default()
}

fn etag_of(body: &[u8]) -> String {
    format!("\"{}\"", hex::encode(Sha256::digest(body)))
}

/// A 200 with a strong validator, or a 304 when the client already has it.
fn cached(req: &HeaderMap, content_type: &str, body: Vec<u8>, extra: &[(header::HeaderName, String)]) -> Response {
    let etag = etag_of(&body);
    let fresh = req
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|t| t.trim() == etag || t.trim() == "*"));
    let mut resp = if fresh {
        StatusCode::NOT_MODIFIED.into_response()
    } else {
        let mut r = Bytes::from(body).into_response();
        r.headers_mut()
            .insert(header::CONTENT_TYPE, HeaderValue::from_str(content_type).expect("static content type"));
        for (k, v) in extra {
            if let Ok(v) = HeaderValue::from_str(v) {
                r.headers_mut().insert(k.clone(), v);
            }
        }
        r
    };
    let h = resp.headers_mut();
    h.insert(header::ETAG, HeaderValue::from_str(&etag).expect("hex etag"));
    h.insert(header::CACHE_CONTROL, HeaderValue::from_static("no-cache"));
    resp
}

fn json_response<T: Serialize>(req: &HeaderMap, value: &T) -> Response {
    let body = serde_json::to_vec(value).expect("response serializes");
    cached(req, "application/json", body, &[])
}

async fn health(State(state): State<AppState>) -> Response {
    let store = match state.snapshot.as_deref() {
        None => "absent",
        Some(s) if s.is_empty() => "empty",
        Some(_) => "loaded",
    };
    Json(json!({ "status": "ok", "store": store })).into_response()
}

#[derive(Serialize)]
struct MetaBody<'a> {
    filings: usize,
    years: Vec<i32>,
    keywords: Vec<KeywordInfo<'a>>,
}

#[derive(Serialize)]
struct KeywordInfo<'a> {
    id: &'a str,
    pattern: &'a str,
}

async fn meta(State(state): State<AppState>, headers: HeaderMap) -> Result<Response, ServiceError> {
    let snap = state.snapshot()?;
    let body = MetaBody {
        filings: snap.index().filings().count(),
        years: snap.index().years(),
        keywords: snap.keywords().patterns().map(|p| KeywordInfo { id: &p.id, pattern: &p.raw }).collect(),
    };
    Ok(json_response(&headers, &body))
}

async fn search(State(state): State<AppState>, headers: HeaderMap, RawQuery(raw): RawQuery) -> Result<Response, ServiceError> {
    let snap = state.snapshot()?;
    let pairs = params(&raw);
    let q = SearchQuery::from_params(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    let page = snap.search(&q)?;
    Ok(json_response(&headers, &page))
}

#[derive(Serialize)]
struct StatsBody {
    query: StatsQuery,
    rows: Vec<tenkscan_core::analytics::StatRow>,
}

async fn stats(State(state): State<AppState>, headers: HeaderMap, RawQuery(raw): RawQuery) -> Result<Response, ServiceError> {
    let snap = state.snapshot()?;
    let pairs = params(&raw);
    let mut as_csv = false;
    let mut rest = Vec::new();
    for (k, v) in &pairs {
        if k == "format" {
            as_csv = match v.as_str() {
                "csv" => true,
                "json" => false,
                other => return Err(ServiceError::BadRequest(format!("unknown stats format {other:?}"))),
            };
        } else {
            rest.push((k.as_str(), v.as_str()));
        }
    }
    let q = StatsQuery::from_params(rest)?;
    let rows = snap.stats(&q)?;
    if as_csv {
        return Ok(cached(&headers, "text/csv; charset=utf-8", stats_csv(&rows), &[]));
    }
    Ok(json_response(&headers, &StatsBody { query: q, rows }))
}

/// Body of `POST /api/export`.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct ExportRequest {
    #[serde(flatten)]
    pub query: SearchQuery,
    #[serde(default = "default_format")]
    pub format: ExportFormat,
}

fn default_format() -> ExportFormat {
    ExportFormat::Csv
}

async fn export(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> Result<Response, ServiceError> {
    let snap = state.snapshot()?;
    let req: ExportRequest = if body.is_empty() {
        ExportRequest { query: SearchQuery::default(), format: ExportFormat::Csv }
    } else {
        serde_json::from_slice(&body).map_err(|e| ServiceError::BadRequest(e.to_string()))?
    };
    let rows = snap.export(&req.query)?;
    let bytes = encode(&rows, req.format).map_err(|e| ServiceError::Export(e.to_string()))?;
    let disposition = format!("attachment; filename=\"matches.{}\"", req.format.extension());
    Ok(cached(&headers, req.format.content_type(), bytes, &[(header::CONTENT_DISPOSITION, disposition)]))
}
