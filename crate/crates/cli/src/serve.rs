//! JSON API over a dataset store for the annotation workflow.
//!
//! | method | path | body |
//! |---|---|---|
//! | GET | `/api/records?status=raw` | |
//! | GET | `/api/records/{id}` | |
//! | POST | `/api/records/{id}/annotation` | `{nl, annotator, version}` |
//! | POST | `/api/records/{id}/crosscheck` | `{verdict, reviewer, version}` |
//! | GET | `/api/stats` | |
//!
//! Errors are `{"error": {"kind": .., "message": ..}}` with status 400 (bad
//! request body or query), 403 (self review), 404 (unknown id), 409 (stale
//! version) or 422 (record not in the required status).

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nl2stl_core::pipeline::{AnnotationError, DatasetRecord, DatasetStore, Status, Verdict};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{io, CliError};

type Shared = Arc<Mutex<DatasetStore>>;

pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({"error": {"kind": "bad_request", "message": message.into()}}),
        }
    }
}

impl From<AnnotationError> for ApiError {
    fn from(e: AnnotationError) -> Self {
        let status = match e {
            AnnotationError::NotFound { .. } => StatusCode::NOT_FOUND,
            AnnotationError::WrongStatus { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            AnnotationError::SelfReview { .. } => StatusCode::FORBIDDEN,
            AnnotationError::VersionConflict { .. } => StatusCode::CONFLICT,
            AnnotationError::PlaceholderMismatch { .. } | AnnotationError::Empty(_) => {
                StatusCode::BAD_REQUEST
            }
            AnnotationError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut detail = serde_json::to_value(&e).unwrap_or_else(|_| json!({}));
        detail["message"] = Value::String(e.to_string());
        ApiError {
            status,
            body: json!({ "error": detail }),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn lock(s: &Shared) -> std::sync::MutexGuard<'_, DatasetStore> {
    s.lock().unwrap_or_else(|e| e.into_inner())
}

#[derive(Deserialize)]
struct ListQuery {
    status: Option<String>,
}

async fn list(
    State(s): State<Shared>,
    Query(q): Query<ListQuery>,
) -> Result<Json<Vec<DatasetRecord>>, ApiError> {
    let wanted: Option<Status> = match q.status.as_deref() {
        None | Some("") => None,
        Some(v) => Some(v.parse().map_err(ApiError::bad_request)?),
    };
    let store = lock(&s);
    Ok(Json(
        store
            .records()
            .iter()
            .filter(|r| wanted.is_none_or(|w| r.status == w))
            .cloned()
            .collect(),
    ))
}

async fn one(State(s): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<DatasetRecord>, ApiError> {
    lock(&s)
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| AnnotationError::NotFound { id }.into())
}

#[derive(Deserialize)]
struct AnnotationBody {
    nl: String,
    annotator: String,
    version: u64,
}

async fn annotate(
    State(s): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<AnnotationBody>, JsonRejection>,
) -> Result<Json<DatasetRecord>, ApiError> {
    let Json(b) = body?;
    let mut store = lock(&s);
    let rec = store.submit_annotation(&id, &b.nl, &b.annotator, b.version)?;
    Ok(Json(rec.clone()))
}

#[derive(Deserialize)]
struct CrosscheckBody {
    verdict: Verdict,
    reviewer: String,
    version: u64,
}

async fn crosscheck(
    State(s): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<CrosscheckBody>, JsonRejection>,
) -> Result<Json<DatasetRecord>, ApiError> {
    let Json(b) = body?;
    let mut store = lock(&s);
    let rec = store.crosscheck(&id, &b.reviewer, b.verdict, b.version)?;
    Ok(Json(rec.clone()))
}

async fn stats(State(s): State<Shared>) -> Json<Value> {
    let store = lock(&s);
    let mut by_status: BTreeMap<&str, usize> = Status::ALL.iter().map(|st| (st.name(), 0)).collect();
    let mut by_domain: BTreeMap<String, usize> = BTreeMap::new();
    for r in store.records() {
        *by_status.entry(r.status.name()).or_default() += 1;
        *by_domain.entry(r.domain.clone()).or_default() += 1;
    }
    Json(json!({
        "total": store.records().len(),
        "by_status": by_status,
        "by_domain": by_domain,
    }))
}

pub fn router(store: DatasetStore) -> Router {
    Router::new()
        .route("/api/records", get(list))
        .route("/api/records/{id}", get(one))
        .route("/api/records/{id}/annotation", post(annotate))
        .route("/api/records/{id}/crosscheck", post(crosscheck))
        .route("/api/stats", get(stats))
        .with_state(Arc::new(Mutex::new(store)))
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| io("tokio runtime", e))
}

/// Serves in the foreground until the process is stopped.
pub fn run_blocking(dataset: &Path, host: &str, port: u16) -> Result<(), CliError> {
    let store = DatasetStore::open(dataset)?;
    runtime()?.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| io(format!("bind {host}:{port}"), e))?;
        let addr = listener.local_addr().map_err(|e| io("listener", e))?;
        eprintln!("serving {} on http://{addr}", dataset.display());
        axum::serve(listener, router(store))
            .await
            .map_err(|e| io("server", e))
    })
}

/// Starts the server on a background thread and returns the bound address.
/// Port 0 picks a free port.
pub fn spawn(store: DatasetStore, host: &str, port: u16) -> Result<SocketAddr, CliError> {
    let rt = runtime()?;
    let listener = rt
        .block_on(tokio::net::TcpListener::bind((host, port)))
        .map_err(|e| io(format!("bind {host}:{port}"), e))?;
    let addr = listener.local_addr().map_err(|e| io("listener", e))?;
    std::thread::spawn(move || {
        rt.block_on(async move {
            let _ = axum::serve(listener, router(store)).await;
        })
    });
    Ok(addr)
}
