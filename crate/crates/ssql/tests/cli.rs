mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use common::fixtures_dir;
use ssql_core::embedding::{read_embeddings, stub_embed, write_embeddings, EmbeddingRecord};

const BIN: &str = env!("CARGO_BIN_EXE_ssql");

fn ssql(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn ok(args: &[&str], stdin: &str) -> String {
    let out = ssql(args, stdin);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

struct Workspace {
    _dir: tempfile::TempDir,
    db: PathBuf,
    index: PathBuf,
}

impl Workspace {
    fn db(&self) -> &str {
        self.db.to_str().unwrap()
    }

    fn index(&self) -> &str {
        self.index.to_str().unwrap()
    }
}

fn ingested() -> Workspace {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.json");
    let index = dir.path().join("index.emb");
    let f = fixtures_dir();
    let path = |p: &str| f.join(p).to_str().unwrap().to_string();
    let out = ok(
        &["ingest-detections", "--coco", &path("annotations.json"), "--images-root", &path("images"), "--db", db.to_str().unwrap()],
        "",
    );
    assert!(out.starts_with("20 images, 57 detections"), "{out}");
    ok(&["ingest-embeddings", "--file", &path("embeddings.emb"), "--index", index.to_str().unwrap()], "");
    Workspace { _dir: dir, db, index }
}

#[test]
fn terminal_relation_and_topk() {
    let ws = ingested();
    let out = ok(&["query", "--db", ws.db(), "--index", ws.index(), ssql_testkit::listings::COUNT], "");
    assert_eq!(out, "id\tc\n5\t4\n15\t4\n(2 rows)\n");
    let out = ok(&["query", "--db", ws.db(), "--index", ws.index(), "--embedder", "stub", "SELECT id FROM images SEMANTIC 'four horses' LIMIT 2"], "");
    assert_eq!(out.lines().map(|l| l.split('\t').next().unwrap()).collect::<Vec<_>>(), ["5", "15"]);
}

#[test]
fn terminal_calibration_reads_answers() {
    let ws = ingested();
    let q = "SELECT DISTINCT id FROM objects WHERE class_name = 'car' SEMANTIC 'two cars on a street'";
    let out = ok(&["query", "--db", ws.db(), "--index", ws.index(), q], "y\nn\nwhat\ny\nn\n");
    assert!(out.starts_with("11 candidates"), "{out}");
    assert!(out.contains("000010.png relevant?"), "{out}");
    assert!(out.contains("please answer y or n"));
    let transcript: serde_json::Value =
        serde_json::from_slice(&std::fs::read(fixtures_dir().join("e2e_transcript.json")).unwrap()).unwrap();
    // same answers as the recorded HTTP script, so the same accepted ids
    let expected: Vec<String> = transcript.as_array().unwrap().last().unwrap()["response"]["image_ids"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.to_string())
        .collect();
    let tail: Vec<&str> = out.lines().skip_while(|l| !l.contains("images accepted")).skip(1).collect();
    assert_eq!(tail.iter().map(|l| l.split('\t').next().unwrap()).collect::<Vec<_>>(), expected);

    let out = ssql(&["query", "--db", ws.db(), "--index", ws.index(), q], "y\n");
    assert!(!out.status.success());
}

#[test]
fn external_embedder_through_the_stub_sidecar() {
    let ws = ingested();
    let sidecar = format!("'{BIN}' stub-sidecar --dim 512");
    let q = "SELECT id FROM images SEMANTIC 'a red umbrella' LIMIT 4";
    let via_cmd = ok(&["query", "--db", ws.db(), "--index", ws.index(), "--embedder", "cmd", "--embedder-cmd", &sidecar, q], "");
    let via_stub = ok(&["query", "--db", ws.db(), "--index", ws.index(), q], "");
    assert_eq!(via_cmd, via_stub);

    let bad = ssql(&["query", "--db", ws.db(), "--index", ws.index(), "--embedder", "cmd", q], "");
    assert!(!bad.status.success());
    let wrong_dim = format!("'{BIN}' stub-sidecar --dim 8");
    let bad = ssql(&["query", "--db", ws.db(), "--index", ws.index(), "--embedder", "cmd", "--embedder-cmd", &wrong_dim, q], "");
    assert!(String::from_utf8_lossy(&bad.stderr).contains("dimension"));
}

#[test]
fn stub_sidecar_speaks_the_protocol() {
    let out = ssql(&["stub-sidecar", "--dim", "16"], "two dogs\n");
    assert!(out.status.success());
    assert_eq!(out.stdout.len(), 4 + 16 * 4);
    assert_eq!(u32::from_le_bytes(out.stdout[..4].try_into().unwrap()), 16);
    let expected = stub_embed("two dogs", 16).unwrap();
    let got: Vec<f32> = out.stdout[4..].chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
    assert_eq!(got, expected.values());
    assert!(!ssql(&["stub-sidecar"], "\n").status.success());
}

#[test]
fn eval_reports_match_the_frozen_baselines() {
    let ws = ingested();
    for suite in ["pairs", "count", "spatial"] {
        let report = ws.db.with_file_name(format!("{suite}.json"));
        ok(
            &["eval", "--suite", suite, "--db", ws.db(), "--index", ws.index(), "--k", "3", "--report", report.to_str().unwrap()],
            "",
        );
        assert_eq!(
            std::fs::read(&report).unwrap(),
            std::fs::read(fixtures_dir().join(format!("baseline/{suite}.json"))).unwrap(),
            "{suite}"
        );
    }
    assert!(!ssql(&["eval", "--suite", "colour", "--db", ws.db(), "--index", ws.index()], "").status.success());
}

#[test]
fn ingest_embeddings_merges_and_checks_dimension() {
    let ws = ingested();
    let dir = ws.db.parent().unwrap();
    let extra = dir.join("extra.emb");
    let v = stub_embed("a red umbrella", 512).unwrap();
    write_embeddings(&extra, 512, &[EmbeddingRecord { image_id: 3, vector: v.clone() }, EmbeddingRecord { image_id: 99, vector: v.clone() }]).unwrap();
    let out = ok(&["ingest-embeddings", "--file", extra.to_str().unwrap(), "--index", ws.index()], "");
    assert!(out.contains("index has 21 vectors"), "{out}");
    let (_, records) = read_embeddings(&ws.index).unwrap();
    let three = records.iter().find(|r| r.image_id == 3).unwrap();
    assert_eq!(three.vector, v);

    let small = dir.join("small.emb");
    write_embeddings(&small, 4, &[EmbeddingRecord { image_id: 1, vector: stub_embed("x", 4).unwrap() }]).unwrap();
    let out = ssql(&["ingest-embeddings", "--file", small.to_str().unwrap(), "--index", ws.index()], "");
    assert!(!out.status.success());
    assert_eq!(read_embeddings(&ws.index).unwrap().1.len(), 21);
}

#[test]
fn fixture_command_writes_the_corpus() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["fixture", "--out", dir.path().to_str().unwrap()], "");
    for name in ["annotations.json", "embeddings.emb"] {
        assert_eq!(std::fs::read(dir.path().join(name)).unwrap(), std::fs::read(fixtures_dir().join(name)).unwrap());
    }
    assert_eq!(std::fs::read_dir(dir.path().join("images")).unwrap().count(), 20);
}

fn http(addr: &str, method: &str, path: &str, body: &str) -> (u16, String) {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: x\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = Vec::new();
    s.read_to_end(&mut raw).unwrap();
    let resp = String::from_utf8_lossy(&raw);
    let status = resp[9..12].parse().unwrap();
    let body = resp.split_once("\r\n\r\n").unwrap().1.to_string();
    (status, body)
}

struct Server(std::process::Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn serve(ws: &Workspace, extra: &[&str]) -> (Server, String) {
    let mut args = vec!["serve", "--db", ws.db(), "--index", ws.index(), "--port", "0"];
    args.extend_from_slice(extra);
    let mut child = Command::new(BIN).args(&args).stderr(Stdio::piped()).spawn().unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap_or_else(|| panic!("{line}")).to_string();
    (Server(child), addr)
}

#[test]
fn served_sessions_survive_a_restart() {
    let ws = ingested();
    let sessions = ws.db.with_file_name("sessions");
    let sessions_arg = sessions.to_str().unwrap();
    let (server, addr) = serve(&ws, &["--sessions-dir", sessions_arg]);
    let (status, body) = http(
        &addr,
        "POST",
        "/v1/query",
        r#"{"ssql": "SELECT DISTINCT id FROM objects WHERE class_name = 'horse' SEMANTIC 'horses'"}"#,
    );
    assert_eq!(status, 200, "{body}");
    let body: serde_json::Value = serde_json::from_str(&body).unwrap();
    let id = body["session_id"].as_str().unwrap().to_string();
    let (status, _) = http(&addr, "POST", &format!("/v1/sessions/{id}/answer"), r#"{"relevant": true}"#);
    assert_eq!(status, 200);
    let (_, before) = http(&addr, "GET", &format!("/v1/sessions/{id}/next"), "");
    drop(server);

    let (_server, addr) = serve(&ws, &["--sessions-dir", sessions_arg]);
    let (status, after) = http(&addr, "GET", &format!("/v1/sessions/{id}/next"), "");
    assert_eq!(status, 200);
    assert_eq!(after, before);
    let (status, _) = http(&addr, "GET", "/v1/images/7", "");
    assert_eq!(status, 200);
}

#[test]
fn bad_flags_fail_cleanly() {
    let ws = ingested();
    assert!(!ssql(&["serve", "--db", ws.db(), "--index", ws.index(), "--embedder", "magic"], "").status.success());
    assert!(!ssql(&["query", "--db", "/nonexistent/db.json", "--index", ws.index(), "SELECT id FROM images"], "").status.success());
}
