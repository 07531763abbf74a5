mod common;

use std::sync::Arc;

use axum::http::StatusCode;
use common::{fixture_app, fixture_state, fixtures_dir, get, post, send_raw};
use serde_json::json;
use ssql::api::{router, sniff_content_type, ApiError, AppState};
use ssql::fixture_files::fixture_engine;
use ssql_core::calibration::{SessionStore, StoreError};
use ssql_core::engine::{Embedder, Engine};
use ssql_core::embedding::SidecarConfig;
use ssql_core::index::ScoredCandidate;
use ssql_testkit::listings;

fn candidates(scores: &[f64]) -> Vec<ScoredCandidate> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &score)| ScoredCandidate {
            image_id: i as i64 + 1,
            score,
        })
        .collect()
}

/// App plus a session over the given scores.
fn with_session(scores: &[f64]) -> (axum::Router, String) {
    let state = fixture_state();
    let session = state.sessions.create(&candidates(scores)).unwrap();
    (router(state, None).unwrap(), session.session_id().to_string())
}

#[tokio::test]
async fn count_listing_returns_a_relation() {
    let app = fixture_app();
    let r = post(&app, "/v1/query", json!({"ssql": listings::COUNT})).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json(), json!({"kind": "relation", "columns": ["id", "c"], "rows": [[5, 4], [15, 4]]}));
}

#[tokio::test]
async fn complex_listing_starts_calibration_over_its_two_images() {
    let app = fixture_app();
    let r = post(&app, "/v1/query", json!({"ssql": listings::COMPLEX})).await;
    assert_eq!(r.status, StatusCode::OK);
    let body = r.json();
    assert_eq!(body["kind"], "calibration");
    assert_eq!(body["candidate_count"], 2);
    assert_eq!(body["missing_ids"], json!([]));
    let id = body["session_id"].as_str().unwrap();
    let next = get(&app, &format!("/v1/sessions/{id}/next")).await.json();
    assert_eq!(next["remaining"], 2);
    assert!([1, 2].contains(&next["image_id"].as_i64().unwrap()));
}

#[tokio::test]
async fn topk_payload_shape() {
    let app = fixture_app();
    let r = post(&app, "/v1/query", json!({"ssql": "SELECT id FROM images SEMANTIC 'four horses' LIMIT 2"})).await;
    let body = r.json();
    assert_eq!(body["kind"], "topk");
    let items = body["items"].as_array().unwrap();
    assert_eq!(items.len(), 2);
    assert_eq!(items[0]["image_id"], 5);
    assert!(items[0]["score"].as_f64().unwrap() >= items[1]["score"].as_f64().unwrap());
    assert_eq!(body["missing_ids"], json!([]));
}

#[tokio::test]
async fn error_codes_and_statuses() {
    let app = fixture_app();
    let cases = [
        (json!({"ssql": "SELEKT id FROM objects"}), StatusCode::BAD_REQUEST, "syntax_error"),
        (json!({"ssql": "   "}), StatusCode::BAD_REQUEST, "syntax_error"),
        (json!({"sql": "SELECT id FROM objects"}), StatusCode::BAD_REQUEST, "syntax_error"),
        (json!({"ssql": "SELECT id FROM nowhere"}), StatusCode::BAD_REQUEST, "unknown_table"),
        (json!({"ssql": "SELECT nope FROM objects"}), StatusCode::BAD_REQUEST, "unknown_table"),
        (json!({"ssql": "SELECT id FROM images WHERE id > 100 SEMANTIC 'x'"}), StatusCode::BAD_REQUEST, "empty_candidates"),
    ];
    for (body, status, code) in cases {
        let r = post(&app, "/v1/query", body.clone()).await;
        assert_eq!(r.status, status, "{body}");
        assert_eq!(r.json()["code"], code, "{body}");
        assert!(r.json()["message"].is_string());
    }
    let r = send_raw(&app, "POST", "/v1/query", Some(b"{not json")).await;
    assert_eq!((r.status, r.json()["code"].clone()), (StatusCode::BAD_REQUEST, json!("syntax_error")));
}

#[tokio::test]
async fn syntax_error_detail_has_position() {
    let r = post(&fixture_app(), "/v1/query", json!({"ssql": "SELECT id\nFROM objects\nWHERE class_name = "})).await;
    let detail = &r.json()["detail"];
    assert_eq!((detail["line"].as_u64(), detail["column"].as_u64()), (Some(3), Some(20)));
    assert_eq!(detail["found"], "end of input");
    assert!(detail["expected"].as_array().unwrap().iter().any(|e| e == "literal"));
}

#[tokio::test]
async fn sidecar_failure_is_a_500() {
    let state = Arc::new(AppState {
        engine: Engine::new(
            fixture_engine(&fixtures_dir()).unwrap().catalog().clone(),
            ssql_core::index::FlatIndex::load(fixtures_dir().join("embeddings.emb")).unwrap(),
            Embedder::External(SidecarConfig::new(vec!["false".into()])),
        ),
        sessions: SessionStore::new(),
        images_root: None,
    });
    let app = router(state, None).unwrap();
    let r = post(&app, "/v1/query", json!({"ssql": "SELECT id FROM images SEMANTIC 'dog' LIMIT 1"})).await;
    assert_eq!(r.status, StatusCode::INTERNAL_SERVER_ERROR);
    assert_eq!(r.json()["code"], "sidecar_error");
    // pure SQL never touches the sidecar
    let r = post(&app, "/v1/query", json!({"ssql": "SELECT id FROM images WHERE id = 3"})).await;
    assert_eq!(r.status, StatusCode::OK);
}

#[tokio::test]
async fn eight_candidate_walkthrough() {
    let (app, id) = with_session(&[0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2]);
    let next = get(&app, &format!("/v1/sessions/{id}/next")).await;
    assert_eq!(
        next.json(),
        json!({"image_id": 4, "image_url": "/v1/images/4", "questions_asked": 0, "remaining": 8, "accepted_so_far": 0})
    );
    // pure read
    assert_eq!(get(&app, &format!("/v1/sessions/{id}/next")).await.bytes, next.bytes);

    let answer = |relevant: bool| {
        let app = app.clone();
        let id = id.clone();
        async move { post(&app, &format!("/v1/sessions/{id}/answer"), json!({"relevant": relevant})).await.json() }
    };
    assert_eq!(answer(false).await["image_id"], 2);
    let after = answer(true).await;
    assert_eq!((after["image_id"].as_i64(), after["accepted_so_far"].as_i64()), (Some(3), Some(2)));
    assert_eq!(answer(true).await, json!({"done": true}));

    let results = get(&app, &format!("/v1/sessions/{id}/results")).await.json();
    assert_eq!(results, json!({"image_ids": [1, 2, 3], "scores": [0.9, 0.8, 0.7]}));
    assert_eq!(get(&app, &format!("/v1/sessions/{id}/next")).await.json(), json!({"done": true}));

    let r = post(&app, &format!("/v1/sessions/{id}/answer"), json!({"relevant": true})).await;
    assert_eq!((r.status, r.json()["code"].clone()), (StatusCode::CONFLICT, json!("session_done")));
}

#[tokio::test]
async fn single_candidate_sessions() {
    for (relevant, ids) in [(true, json!([1])), (false, json!([]))] {
        let (app, id) = with_session(&[0.5]);
        let r = post(&app, &format!("/v1/sessions/{id}/answer"), json!({"relevant": relevant})).await;
        assert_eq!(r.json(), json!({"done": true}));
        assert_eq!(get(&app, &format!("/v1/sessions/{id}/results")).await.json()["image_ids"], ids);
    }
}

#[tokio::test]
async fn results_before_done_conflict_and_unknown_session() {
    let (app, id) = with_session(&[0.5, 0.4]);
    let r = get(&app, &format!("/v1/sessions/{id}/results")).await;
    assert_eq!((r.status, r.json()["code"].clone()), (StatusCode::CONFLICT, json!("session_done")));
    for path in ["/v1/sessions/feedbeef/next", "/v1/sessions/feedbeef/results", "/v1/sessions/..%2Fetc/next"] {
        let r = get(&app, path).await;
        assert_eq!((r.status, r.json()["code"].clone()), (StatusCode::NOT_FOUND, json!("session_not_found")), "{path}");
    }
    let r = post(&app, "/v1/sessions/feedbeef/answer", json!({"relevant": true})).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = post(&app, &format!("/v1/sessions/{id}/answer"), json!({"relevant": "yes"})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[test]
fn contended_session_maps_to_409() {
    let e = ApiError::from(StoreError::Busy("abc".into()));
    assert_eq!(e.code.status(), StatusCode::CONFLICT);
    assert_eq!(serde_json::to_value(&e).unwrap()["code"], "session_done");
}

#[tokio::test]
async fn images_are_served_with_sniffed_type() {
    let app = fixture_app();
    let r = get(&app, "/v1/images/5").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.content_type.as_deref(), Some("image/png"));
    assert_eq!(r.bytes, std::fs::read(fixtures_dir().join("images/000005.png")).unwrap());
    for path in ["/v1/images/999", "/v1/images/abc", "/v1/images/..%2F..%2Fetc%2Fpasswd", "/v1/images/-1"] {
        assert_eq!(get(&app, path).await.status, StatusCode::NOT_FOUND, "{path}");
    }
}

#[tokio::test]
async fn relative_paths_resolve_under_images_root() {
    let tmp = tempfile::tempdir().unwrap();
    let jpeg = [0xff, 0xd8, 0xff, 0xe0, 0, 0x10, b'J', b'F', b'I', b'F'];
    std::fs::write(tmp.path().join("a.jpg"), jpeg).unwrap();
    let mut catalog = ssql_core::catalog::Catalog::new();
    catalog
        .ingest_coco_json(
            r#"{"images":[{"id":1,"file_name":"a.jpg","width":2,"height":2},{"id":2,"file_name":"gone.jpg","width":2,"height":2}],"annotations":[],"categories":[]}"#,
            "",
        )
        .unwrap();
    let state = Arc::new(AppState {
        engine: Engine::new(catalog, ssql_core::index::FlatIndex::empty(4), Embedder::Stub),
        sessions: SessionStore::new(),
        images_root: Some(tmp.path().to_path_buf()),
    });
    let app = router(state, None).unwrap();
    let r = get(&app, "/v1/images/1").await;
    assert_eq!((r.status, r.content_type.as_deref()), (StatusCode::OK, Some("image/jpeg")));
    assert_eq!(get(&app, "/v1/images/2").await.status, StatusCode::NOT_FOUND);
}

#[test]
fn content_sniffing() {
    assert_eq!(sniff_content_type(&[0xff, 0xd8, 0xff, 0xdb]), "image/jpeg");
    assert_eq!(sniff_content_type(b"\x89PNG\r\n\x1a\n...."), "image/png");
    assert_eq!(sniff_content_type(b"GIF89a"), "application/octet-stream");
    assert_eq!(sniff_content_type(b""), "application/octet-stream");
}

#[tokio::test]
async fn cors_only_when_configured() {
    use axum::body::Body;
    use axum::http::Request;
    use tower::ServiceExt;

    let preflight = || {
        Request::builder()
            .method("OPTIONS")
            .uri("/v1/query")
            .header("origin", "http://localhost:5173")
            .header("access-control-request-method", "POST")
            .body(Body::empty())
            .unwrap()
    };
    let app = router(fixture_state(), Some("http://localhost:5173")).unwrap();
    let resp = app.oneshot(preflight()).await.unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "http://localhost:5173");

    let resp = fixture_app().oneshot(preflight()).await.unwrap();
    assert!(resp.headers().get("access-control-allow-origin").is_none());
}
