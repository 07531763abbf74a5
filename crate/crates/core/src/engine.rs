//! End-to-end query execution: relational filter first, semantic scoring second.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::calibration::{SessionStore, StoreError};
use crate::catalog::{image_ids_of, Catalog, ExecError, IdError, ResultRelation};
use crate::embedding::{external_embed, normalize, stub_embed, EmbeddingVector, SidecarConfig, SidecarError, VectorError};
use crate::index::{FlatIndex, IndexError, ScoredCandidate};
use crate::parser::{self, ParseError, SemanticClause, SsqlQuery};
use crate::ImageId;

/// How predicate text becomes a vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Embedder {
    Stub,
    External(SidecarConfig),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Ids(#[from] IdError),
    #[error("cannot embed predicate text: {0}")]
    Embedding(#[from] VectorError),
    #[error(transparent)]
    Sidecar(#[from] SidecarError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Store(#[from] StoreError),
    /// The semantic predicate has nothing to score.
    #[error("the relational part returned no scorable images ({} without embeddings)", missing.len())]
    EmptyCandidateSet { missing: Vec<ImageId> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Relation,
    TopK,
    CalibrationStarted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryOutcome {
    pub kind: OutcomeKind,
    pub relation: Option<ResultRelation>,
    pub topk: Option<Vec<ScoredCandidate>>,
    pub session_id: Option<String>,
    /// Candidates the relational part returned that have no embedding.
    pub missing_ids: Vec<ImageId>,
    /// Rows for a relation, scored candidates otherwise.
    pub candidate_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineStep {
    Parse,
    Split,
    Execute,
    Embed,
    Score,
    Topk,
    Calibrate,
}

impl PipelineStep {
    pub fn as_str(self) -> &'static str {
        match self {
            PipelineStep::Parse => "parse",
            PipelineStep::Split => "split",
            PipelineStep::Execute => "execute",
            PipelineStep::Embed => "embed",
            PipelineStep::Score => "score",
            PipelineStep::Topk => "topk",
            PipelineStep::Calibrate => "calibrate",
        }
    }
}

impl fmt::Display for PipelineStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Steps `run` would take for `ssql`, without executing anything.
pub fn compose_pipeline_trace(ssql: &str) -> Result<Vec<PipelineStep>, ParseError> {
    use PipelineStep::*;
    let parsed = parser::parse(ssql)?;
    Ok(match parsed.semantic {
        None => vec![Parse, Execute],
        Some(SemanticClause { topk: Some(_), .. }) => vec![Parse, Split, Execute, Embed, Score, Topk],
        Some(SemanticClause { topk: None, .. }) => vec![Parse, Split, Execute, Embed, Score, Calibrate],
    })
}

/// Read-only after construction; share it across threads freely.
#[derive(Debug, Clone)]
pub struct Engine {
    catalog: Catalog,
    index: FlatIndex,
    embedder: Embedder,
}

impl Engine {
    pub fn new(catalog: Catalog, index: FlatIndex, embedder: Embedder) -> Self {
        Self {
            catalog,
            index,
            embedder,
        }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn index(&self) -> &FlatIndex {
        &self.index
    }

    pub fn embedder(&self) -> &Embedder {
        &self.embedder
    }

    /// Unit vector for `text` in the index's space.
    pub fn embed_text(&self, text: &str) -> Result<EmbeddingVector, EngineError> {
        let dim = self.index.dim();
        let raw = match &self.embedder {
            Embedder::Stub => stub_embed(text, dim)?,
            Embedder::External(cfg) => external_embed(cfg, text, dim)?,
        };
        Ok(normalize(&raw)?)
    }

    /// Semantic-only retrieval over the whole index.
    pub fn search(&self, text: &str, k: usize) -> Result<Vec<ScoredCandidate>, EngineError> {
        let q = self.embed_text(text)?;
        Ok(self.index.top_k(&q, k)?)
    }

    /// Score the images selected by `base` against `text`, best first.
    pub fn score_candidates(
        &self,
        base: &ResultRelation,
        text: &str,
    ) -> Result<(Vec<ScoredCandidate>, Vec<ImageId>), EngineError> {
        let ids = image_ids_of(base)?;
        if ids.is_empty() {
            return Err(EngineError::EmptyCandidateSet { missing: Vec::new() });
        }
        let q = self.embed_text(text)?;
        match self.index.score_subset(&q, &ids) {
            Ok(s) => Ok((s.scored, s.missing)),
            Err(IndexError::AllMissing(_)) => Err(EngineError::EmptyCandidateSet { missing: ids }),
            Err(e) => Err(e.into()),
        }
    }

    pub fn run(&self, ssql: &str, sessions: &SessionStore) -> Result<QueryOutcome, EngineError> {
        self.run_parsed(&parser::parse(ssql)?, sessions)
    }

    pub fn run_parsed(&self, parsed: &SsqlQuery, sessions: &SessionStore) -> Result<QueryOutcome, EngineError> {
        let base = self.catalog.execute_query(&parsed.base)?;
        let Some(semantic) = &parsed.semantic else {
            return Ok(QueryOutcome {
                kind: OutcomeKind::Relation,
                candidate_count: base.rows.len(),
                relation: Some(base),
                topk: None,
                session_id: None,
                missing_ids: Vec::new(),
            });
        };
        let (mut scored, missing_ids) = self.score_candidates(&base, &semantic.text)?;
        let candidate_count = scored.len();
        match semantic.topk {
            Some(k) => {
                scored.truncate(usize::try_from(k).unwrap_or(usize::MAX));
                Ok(QueryOutcome {
                    kind: OutcomeKind::TopK,
                    relation: None,
                    topk: Some(scored),
                    session_id: None,
                    missing_ids,
                    candidate_count,
                })
            }
            None => {
                let session = sessions.create(&scored)?;
                Ok(QueryOutcome {
                    kind: OutcomeKind::CalibrationStarted,
                    relation: None,
                    topk: None,
                    session_id: Some(session.session_id().to_string()),
                    missing_ids,
                    candidate_count,
                })
            }
        }
    }
}
