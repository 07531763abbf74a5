#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use ssql::api::{router, AppState};
use ssql::fixture_files::fixture_engine;
use ssql_core::calibration::SessionStore;
use tower::ServiceExt;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_state() -> Arc<AppState> {
    Arc::new(AppState {
        engine: fixture_engine(&fixtures_dir()).unwrap(),
        sessions: SessionStore::new(),
        images_root: None,
    })
}

pub fn fixture_app() -> Router {
    router(fixture_state(), None).unwrap()
}

pub struct Reply {
    pub status: StatusCode,
    pub content_type: Option<String>,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.bytes)))
    }
}

pub async fn send_raw(app: &Router, method: &str, path: &str, body: Option<&[u8]>) -> Reply {
    let mut req = Request::builder().method(method).uri(path);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(body.map(|b| Body::from(b.to_vec())).unwrap_or_else(Body::empty)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let content_type = resp
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply {
        status,
        content_type,
        bytes,
    }
}

pub async fn get(app: &Router, path: &str) -> Reply {
    send_raw(app, "GET", path, None).await
}

pub async fn post(app: &Router, path: &str, body: Value) -> Reply {
    send_raw(app, "POST", path, Some(body.to_string().as_bytes())).await
}

/// Run a recorded request script; `{session}` in paths is the most recent
/// calibration session id. Also returns the raw response bodies.
pub async fn replay(app: &Router, script: &Value) -> (Value, Vec<Vec<u8>>) {
    let mut session = String::new();
    let mut transcript = Vec::new();
    let mut raw = Vec::new();
    for step in script.as_array().unwrap() {
        let method = step["method"].as_str().unwrap();
        let path = step["path"].as_str().unwrap().replace("{session}", &session);
        let body = step.get("body").map(|b| b.to_string());
        let reply = send_raw(app, method, &path, body.as_deref().map(str::as_bytes)).await;
        let response = reply.json();
        if let Some(id) = response.get("session_id").and_then(Value::as_str) {
            session = id.to_string();
        }
        transcript.push(json!({
            "method": method,
            "path": path,
            "body": step.get("body"),
            "status": reply.status.as_u16(),
            "response": response,
        }));
        raw.push(reply.bytes);
    }
    (Value::Array(transcript), raw)
}

pub fn script() -> Value {
    serde_json::from_slice(&std::fs::read(fixtures_dir().join("e2e_script.json")).unwrap()).unwrap()
}

pub fn transcript_bytes(transcript: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(transcript).unwrap();
    out.push(b'\n');
    out
}
