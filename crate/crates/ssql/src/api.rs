//! JSON-over-HTTP surface for queries and calibration sessions.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as JsonValue};
use ssql_core::calibration::{CalibrationError, CalibrationSession, SessionStore, StoreError};
use ssql_core::catalog::{ExecError, Value};
use ssql_core::embedding::VectorError;
use ssql_core::engine::{Engine, EngineError, OutcomeKind};
use ssql_core::index::ScoredCandidate;
use ssql_core::parser::ParseError;
use ssql_core::ImageId;
use tower_http::cors::CorsLayer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    SyntaxError,
    UnknownTable,
    SessionDone,
    SessionNotFound,
    EmptyCandidates,
    SidecarError,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::SyntaxError | ErrorCode::UnknownTable | ErrorCode::EmptyCandidates => StatusCode::BAD_REQUEST,
            ErrorCode::SessionNotFound => StatusCode::NOT_FOUND,
            ErrorCode::SessionDone => StatusCode::CONFLICT,
            ErrorCode::SidecarError | ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<JsonValue>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            detail: None,
        }
    }

    fn with_detail(mut self, detail: JsonValue) -> Self {
        self.detail = Some(detail);
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

impl From<ParseError> for ApiError {
    fn from(e: ParseError) -> Self {
        let (line, column) = e.position();
        let mut detail = json!({"line": line, "column": column});
        if let ParseError::Syntax { expected, found, .. } = &e {
            detail["expected"] = json!(expected);
            detail["found"] = json!(found);
        }
        ApiError::new(ErrorCode::SyntaxError, e.to_string()).with_detail(detail)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let msg = e.to_string();
        match e {
            StoreError::NotFound(_) => ApiError::new(ErrorCode::SessionNotFound, msg),
            StoreError::Busy(_) => ApiError::new(ErrorCode::SessionDone, msg).with_detail(json!({"reason": "busy"})),
            StoreError::Session(CalibrationError::SessionDone) => ApiError::new(ErrorCode::SessionDone, msg),
            StoreError::Session(CalibrationError::SessionNotDone) => {
                ApiError::new(ErrorCode::SessionDone, msg).with_detail(json!({"reason": "not_done"}))
            }
            StoreError::Session(CalibrationError::EmptyCandidates) => ApiError::new(ErrorCode::EmptyCandidates, msg),
            _ => ApiError::new(ErrorCode::Internal, msg),
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let msg = e.to_string();
        match e {
            EngineError::Parse(p) => p.into(),
            EngineError::Exec(ExecError::UnknownTable(_) | ExecError::UnknownColumn(_)) => {
                ApiError::new(ErrorCode::UnknownTable, msg)
            }
            EngineError::Exec(ExecError::Parse(p)) => p.into(),
            EngineError::Exec(_) | EngineError::Ids(_) => ApiError::new(ErrorCode::SyntaxError, msg),
            EngineError::Embedding(VectorError::EmptyText) => ApiError::new(ErrorCode::SyntaxError, msg),
            EngineError::Embedding(_) | EngineError::Sidecar(_) => ApiError::new(ErrorCode::SidecarError, msg),
            EngineError::EmptyCandidateSet { missing } => {
                ApiError::new(ErrorCode::EmptyCandidates, msg).with_detail(json!({"missing_ids": missing}))
            }
            EngineError::Store(s) => s.into(),
            EngineError::Index(_) => ApiError::new(ErrorCode::Internal, msg),
        }
    }
}

/// Body of a successful `POST /v1/query`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryResponse {
    Relation {
        columns: Vec<String>,
        rows: Vec<Vec<Value>>,
    },
    Topk {
        items: Vec<ScoredCandidate>,
        missing_ids: Vec<ImageId>,
    },
    Calibration {
        session_id: String,
        candidate_count: usize,
        missing_ids: Vec<ImageId>,
    },
}

/// Body of `/next` and `/answer`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ProbeResponse {
    Probe {
        image_id: ImageId,
        image_url: String,
        questions_asked: usize,
        remaining: usize,
        accepted_so_far: usize,
    },
    Done {
        done: bool,
    },
}

impl ProbeResponse {
    pub fn of(session: &CalibrationSession) -> Self {
        match session.pending_probe() {
            Some(image_id) => ProbeResponse::Probe {
                image_id,
                image_url: format!("/v1/images/{image_id}"),
                questions_asked: session.questions().len(),
                remaining: session.remaining().len(),
                accepted_so_far: session.accepted().len(),
            },
            None => ProbeResponse::Done { done: true },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultsResponse {
    pub image_ids: Vec<ImageId>,
    pub scores: Vec<f64>,
}

#[derive(Deserialize)]
struct QueryRequest {
    ssql: String,
}

#[derive(Deserialize)]
struct AnswerRequest {
    relevant: bool,
}

pub struct AppState {
    pub engine: Engine,
    pub sessions: SessionStore,
    /// Base for catalog image paths that are relative.
    pub images_root: Option<PathBuf>,
}

pub type SharedState = Arc<AppState>;

fn body_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(ErrorCode::SyntaxError, format!("invalid request body: {e}")))
}

async fn query(State(state): State<SharedState>, body: Bytes) -> Result<Json<QueryResponse>, ApiError> {
    let req: QueryRequest = body_json(&body)?;
    if req.ssql.trim().is_empty() {
        return Err(ApiError::new(ErrorCode::SyntaxError, "ssql must not be empty"));
    }
    // may block on an external embedder
    let outcome = tokio::task::spawn_blocking(move || state.engine.run(&req.ssql, &state.sessions))
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))??;
    Ok(Json(match outcome.kind {
        OutcomeKind::Relation => {
            let rel = outcome.relation.ok_or_else(|| ApiError::new(ErrorCode::Internal, "relation missing"))?;
            QueryResponse::Relation {
                columns: rel.column_names,
                rows: rel.rows,
            }
        }
        OutcomeKind::TopK => QueryResponse::Topk {
            items: outcome.topk.unwrap_or_default(),
            missing_ids: outcome.missing_ids,
        },
        OutcomeKind::CalibrationStarted => QueryResponse::Calibration {
            session_id: outcome.session_id.unwrap_or_default(),
            candidate_count: outcome.candidate_count,
            missing_ids: outcome.missing_ids,
        },
    }))
}

async fn next(State(state): State<SharedState>, Path(id): Path<String>) -> Result<Json<ProbeResponse>, ApiError> {
    Ok(Json(ProbeResponse::of(&state.sessions.get(&id)?)))
}

async fn answer(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ProbeResponse>, ApiError> {
    let req: AnswerRequest = body_json(&body)?;
    Ok(Json(ProbeResponse::of(&state.sessions.answer(&id, req.relevant)?)))
}

async fn results(State(state): State<SharedState>, Path(id): Path<String>) -> Result<Json<ResultsResponse>, ApiError> {
    let session = state.sessions.get(&id)?;
    let accepted = session.results().map_err(StoreError::from)?;
    Ok(Json(ResultsResponse {
        image_ids: accepted.iter().map(|c| c.image_id).collect(),
        scores: accepted.iter().map(|c| c.score).collect(),
    }))
}

pub fn sniff_content_type(bytes: &[u8]) -> &'static str {
    if bytes.starts_with(&[0xff, 0xd8, 0xff]) {
        "image/jpeg"
    } else if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        "image/png"
    } else {
        "application/octet-stream"
    }
}

/// Relative catalog paths are tried under `root`, then as given.
pub fn resolve_image_path(file_path: &str, root: Option<&std::path::Path>) -> Option<PathBuf> {
    let path = PathBuf::from(file_path);
    let mut tries = Vec::new();
    if let (true, Some(root)) = (path.is_relative(), root) {
        tries.push(root.join(&path));
        if let Some(name) = path.file_name() {
            tries.push(root.join(name));
        }
    }
    tries.push(path);
    tries.into_iter().find(|p| p.is_file())
}

async fn image(State(state): State<SharedState>, Path(id): Path<String>) -> Response {
    let not_found = || (StatusCode::NOT_FOUND, "image not found").into_response();
    let Ok(id) = id.parse::<ImageId>() else {
        return not_found();
    };
    let Some(meta) = state.engine.catalog().image(id) else {
        return not_found();
    };
    let Some(path) = resolve_image_path(&meta.file_path, state.images_root.as_deref()) else {
        return not_found();
    };
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, sniff_content_type(&bytes))], bytes).into_response(),
        Err(_) => not_found(),
    }
}

pub fn router(state: SharedState, cors_origin: Option<&str>) -> anyhow::Result<Router> {
    let mut app = Router::new()
        .route("/v1/query", post(query))
        .route("/v1/sessions/{id}/next", get(next))
        .route("/v1/sessions/{id}/answer", post(answer))
        .route("/v1/sessions/{id}/results", get(results))
        .route("/v1/images/{id}", get(image))
        .with_state(state);
    if let Some(origin) = cors_origin {
        app = app.layer(
            CorsLayer::new()
                .allow_origin(HeaderValue::from_str(origin)?)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    Ok(app)
}
