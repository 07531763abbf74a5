//! Python bindings. Results come back as plain dicts and lists shaped like the
//! HTTP payloads.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::{json, Value};
use ssql_core::calibration::{self, SessionStore};
use ssql_core::catalog::Catalog;
use ssql_core::embedding::{self, EmbeddingRecord, EmbeddingVector, SidecarConfig};
use ssql_core::engine::{self, Embedder, OutcomeKind, QueryOutcome};
use ssql_core::eval::{self as harness, Suite};
use ssql_core::index::{FlatIndex, ScoredCandidate};
use ssql_core::parser;
use ssql_core::ImageId;

create_exception!(ssql, SsqlError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    SsqlError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

type Records = Vec<(ImageId, Vec<f32>)>;

fn candidates(pairs: Vec<(ImageId, f64)>) -> Vec<ScoredCandidate> {
    pairs
        .into_iter()
        .map(|(image_id, score)| ScoredCandidate { image_id, score })
        .collect()
}

fn pairs(cands: &[ScoredCandidate]) -> Vec<(ImageId, f64)> {
    cands.iter().map(|c| (c.image_id, c.score)).collect()
}

fn outcome_json(o: QueryOutcome) -> Value {
    match o.kind {
        OutcomeKind::Relation => {
            let rel = o.relation.unwrap_or_else(|| unreachable!("relation outcome without rows"));
            json!({"kind": "relation", "columns": rel.column_names, "rows": rel.rows})
        }
        OutcomeKind::TopK => json!({"kind": "topk", "items": o.topk, "missing_ids": o.missing_ids}),
        OutcomeKind::CalibrationStarted => json!({
            "kind": "calibration",
            "session_id": o.session_id,
            "candidate_count": o.candidate_count,
            "missing_ids": o.missing_ids,
        }),
    }
}

fn probe_json(s: &calibration::CalibrationSession) -> Value {
    match s.pending_probe() {
        Some(id) => json!({
            "image_id": id,
            "image_url": format!("/v1/images/{id}"),
            "questions_asked": s.questions().len(),
            "remaining": s.remaining().len(),
            "accepted_so_far": s.accepted().len(),
        }),
        None => json!({"done": true}),
    }
}

/// One calibration session, driven directly.
#[pyclass(module = "ssql")]
struct CalibrationSession {
    inner: calibration::CalibrationSession,
}

#[pymethods]
impl CalibrationSession {
    #[new]
    #[pyo3(signature = (candidates, session_id = "local"))]
    fn new(candidates: Vec<(ImageId, f64)>, session_id: &str) -> PyResult<Self> {
        let inner = calibration::CalibrationSession::start(session_id, &self::candidates(candidates)).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: calibration::CalibrationSession::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn session_id(&self) -> &str {
        self.inner.session_id()
    }

    /// Image id to ask about next, or None when done.
    #[getter]
    fn probe(&self) -> Option<ImageId> {
        self.inner.pending_probe()
    }

    #[getter]
    fn done(&self) -> bool {
        self.inner.is_done()
    }

    #[getter]
    fn questions_asked(&self) -> usize {
        self.inner.questions().len()
    }

    #[getter]
    fn remaining(&self) -> usize {
        self.inner.remaining().len()
    }

    fn answer(&mut self, relevant: bool) -> PyResult<Option<ImageId>> {
        self.inner.answer(relevant).map_err(err)?;
        Ok(self.inner.pending_probe())
    }

    /// Accepted `(image_id, score)` pairs, best first.
    fn results(&self) -> PyResult<Vec<(ImageId, f64)>> {
        Ok(pairs(&self.inner.results().map_err(err)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "CalibrationSession(id={:?}, questions_asked={}, done={})",
            self.inner.session_id(),
            self.inner.questions().len(),
            self.inner.is_done()
        )
    }
}

#[pyclass(module = "ssql")]
struct Engine {
    inner: engine::Engine,
    sessions: SessionStore,
}

fn make_embedder(embedder: &str, embedder_cmd: Option<Vec<String>>) -> PyResult<Embedder> {
    match (embedder, embedder_cmd) {
        ("stub", _) => Ok(Embedder::Stub),
        ("cmd", Some(argv)) if !argv.is_empty() => Ok(Embedder::External(SidecarConfig::new(argv))),
        ("cmd", _) => Err(err("embedder 'cmd' needs a non-empty embedder_cmd list")),
        (other, _) => Err(err(format!("unknown embedder {other:?}"))),
    }
}

#[pymethods]
impl Engine {
    /// Open a database file and an SSQLEMB1 index.
    #[new]
    #[pyo3(signature = (db, index, embedder = "stub", embedder_cmd = None))]
    fn new(db: PathBuf, index: PathBuf, embedder: &str, embedder_cmd: Option<Vec<String>>) -> PyResult<Self> {
        let catalog = Catalog::load(&db).map_err(err)?;
        let index = FlatIndex::load(&index).map_err(err)?;
        Ok(Self {
            inner: engine::Engine::new(catalog, index, make_embedder(embedder, embedder_cmd)?),
            sessions: SessionStore::new(),
        })
    }

    /// Build from a COCO annotation file and an SSQLEMB1 file, without a database.
    #[staticmethod]
    #[pyo3(signature = (annotations, embeddings, images_root = PathBuf::new(), embedder = "stub", embedder_cmd = None))]
    fn from_files(
        annotations: PathBuf,
        embeddings: PathBuf,
        images_root: PathBuf,
        embedder: &str,
        embedder_cmd: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let mut catalog = Catalog::new();
        catalog.ingest_annotations(&annotations, &images_root).map_err(err)?;
        let index = FlatIndex::load(&embeddings).map_err(err)?;
        Ok(Self {
            inner: engine::Engine::new(catalog, index, make_embedder(embedder, embedder_cmd)?),
            sessions: SessionStore::new(),
        })
    }

    #[getter]
    fn image_count(&self) -> usize {
        self.inner.catalog().image_count()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.index().dim()
    }

    fn classes(&self) -> Vec<String> {
        self.inner.catalog().classes()
    }

    fn query<'py>(&self, py: Python<'py>, ssql: &str) -> PyResult<Bound<'py, PyAny>> {
        let outcome = self.inner.run(ssql, &self.sessions).map_err(err)?;
        to_py(py, &outcome_json(outcome))
    }

    /// Semantic-only top-k over every indexed image.
    fn search(&self, text: &str, k: usize) -> PyResult<Vec<(ImageId, f64)>> {
        Ok(pairs(&self.inner.search(text, k).map_err(err)?))
    }

    fn next<'py>(&self, py: Python<'py>, session_id: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &probe_json(&self.sessions.get(session_id).map_err(err)?))
    }

    fn answer<'py>(&self, py: Python<'py>, session_id: &str, relevant: bool) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &probe_json(&self.sessions.answer(session_id, relevant).map_err(err)?))
    }

    fn results<'py>(&self, py: Python<'py>, session_id: &str) -> PyResult<Bound<'py, PyAny>> {
        let accepted = self.sessions.get(session_id).map_err(err)?.results().map_err(err)?;
        let ids: Vec<ImageId> = accepted.iter().map(|c| c.image_id).collect();
        let scores: Vec<f64> = accepted.iter().map(|c| c.score).collect();
        to_py(py, &json!({"image_ids": ids, "scores": scores}))
    }

    /// Run an evaluation suite: "pairs", "count" or "spatial".
    #[pyo3(signature = (suite, k = harness::DEFAULT_K, classes = None, max_count = 10, spatial_threshold = harness::DEFAULT_SPATIAL_THRESHOLD))]
    fn eval<'py>(
        &self,
        py: Python<'py>,
        suite: &str,
        k: usize,
        classes: Option<Vec<String>>,
        max_count: usize,
        spatial_threshold: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let suite: Suite = suite.parse().map_err(err)?;
        let classes = classes.unwrap_or_else(|| self.inner.catalog().classes());
        let report = match suite {
            Suite::Pairs => harness::run_suite(&self.inner, suite, &harness::pair_specs(&classes), k),
            Suite::Count => harness::eval_count(&self.inner, &classes, max_count, k),
            Suite::Spatial => harness::eval_spatial(&self.inner, &classes, k, spatial_threshold),
        }
        .map_err(err)?;
        to_py(py, &serde_json::to_value(report).map_err(err)?)
    }
}

/// `(base_sql, semantic_text, topk)` for an SSQL string.
#[pyfunction]
fn split(ssql: &str) -> PyResult<(String, Option<String>, Option<u64>)> {
    let q = parser::parse(ssql).map_err(err)?;
    let (base, semantic) = parser::split(&q);
    Ok((base, semantic.as_ref().map(|s| s.text.clone()), semantic.and_then(|s| s.topk)))
}

/// Canonical text of an SSQL string.
#[pyfunction]
fn normalize_query(ssql: &str) -> PyResult<String> {
    Ok(parser::render(&parser::parse(ssql).map_err(err)?))
}

#[pyfunction]
fn stub_embed(text: &str, dim: usize) -> PyResult<Vec<f32>> {
    Ok(embedding::stub_embed(text, dim).map_err(err)?.into_values())
}

#[pyfunction]
fn question_budget(n: usize) -> usize {
    calibration::question_budget(n)
}

#[pyfunction]
fn read_embeddings(path: PathBuf) -> PyResult<(usize, Records)> {
    let (dim, records) = embedding::read_embeddings(&path).map_err(err)?;
    Ok((dim, records.into_iter().map(|r| (r.image_id, r.vector.into_values())).collect()))
}

#[pyfunction]
fn write_embeddings(path: PathBuf, dim: usize, records: Records) -> PyResult<()> {
    let records = records
        .into_iter()
        .map(|(image_id, values)| {
            Ok(EmbeddingRecord {
                image_id,
                vector: EmbeddingVector::new(values).map_err(err)?,
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    embedding::write_embeddings(&path, dim, &records).map_err(err)
}

#[pymodule]
#[pyo3(name = "ssql")]
fn ssql_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SsqlError", m.py().get_type::<SsqlError>())?;
    m.add_class::<Engine>()?;
    m.add_class::<CalibrationSession>()?;
    m.add_function(wrap_pyfunction!(split, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_query, m)?)?;
    m.add_function(wrap_pyfunction!(stub_embed, m)?)?;
    m.add_function(wrap_pyfunction!(question_budget, m)?)?;
    m.add_function(wrap_pyfunction!(read_embeddings, m)?)?;
    m.add_function(wrap_pyfunction!(write_embeddings, m)?)?;
    Ok(())
}
