//! Exact (flat) nearest-neighbour index over unit-normalized image embeddings.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{self, dot, normalize, EmbeddingRecord, EmbeddingVector, FileError};
use crate::ImageId;

/// One image with its similarity to the query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub image_id: ImageId,
    pub score: f64,
}

/// Total order used everywhere candidates are ranked: score descending, then id ascending.
pub fn rank_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.score.total_cmp(&a.score).then(a.image_id.cmp(&b.image_id))
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("duplicate image id {0}")]
    DuplicateId(ImageId),
    #[error("image {0} has a zero embedding")]
    ZeroVector(ImageId),
    #[error("dimension mismatch: index has {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("query vector must be normalized")]
    NotNormalized,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("none of the {0} requested ids have embeddings")]
    AllMissing(usize),
    #[error("no ids to score")]
    EmptyIds,
    #[error(transparent)]
    File(#[from] FileError),
}

/// Result of scoring a candidate subset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetScores {
    pub scored: Vec<ScoredCandidate>,
    /// Requested ids with no embedding, in request order.
    pub missing: Vec<ImageId>,
}

/// Immutable after construction. Vectors live in one contiguous buffer.
#[derive(Debug, Clone)]
pub struct FlatIndex {
    dim: usize,
    ids: Vec<ImageId>,
    data: Vec<f32>,
    positions: HashMap<ImageId, usize>,
}

impl FlatIndex {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            ids: Vec::new(),
            data: Vec::new(),
            positions: HashMap::new(),
        }
    }

    /// Normalize and store every record.
    pub fn build(dim: usize, records: &[EmbeddingRecord]) -> Result<Self, IndexError> {
        let mut index = Self::empty(dim);
        index.ids.reserve(records.len());
        index.data.reserve(records.len() * dim);
        for rec in records {
            if rec.vector.dim() != dim {
                return Err(IndexError::DimensionMismatch {
                    expected: dim,
                    actual: rec.vector.dim(),
                });
            }
            if index.positions.insert(rec.image_id, index.ids.len()).is_some() {
                return Err(IndexError::DuplicateId(rec.image_id));
            }
            let unit = normalize(&rec.vector).map_err(|_| IndexError::ZeroVector(rec.image_id))?;
            index.ids.push(rec.image_id);
            index.data.extend_from_slice(unit.values());
        }
        Ok(index)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        let (dim, records) = embedding::read_embeddings(path)?;
        Self::build(dim, &records)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[ImageId] {
        &self.ids
    }

    pub fn contains(&self, id: ImageId) -> bool {
        self.positions.contains_key(&id)
    }

    /// Stored unit vector for `id`.
    pub fn vector(&self, id: ImageId) -> Option<&[f32]> {
        let pos = *self.positions.get(&id)?;
        Some(&self.data[pos * self.dim..(pos + 1) * self.dim])
    }

    fn check_query(&self, query: &EmbeddingVector) -> Result<(), IndexError> {
        if query.dim() != self.dim {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim,
                actual: query.dim(),
            });
        }
        if !query.is_normalized() {
            return Err(IndexError::NotNormalized);
        }
        Ok(())
    }

    fn score_at(&self, pos: usize, query: &[f32]) -> f64 {
        dot(&self.data[pos * self.dim..(pos + 1) * self.dim], query).clamp(-1.0, 1.0)
    }

    /// The `min(k, len)` best entries in rank order.
    pub fn top_k(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<ScoredCandidate>, IndexError> {
        self.check_query(query)?;
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        let q = query.values();
        let mut all: Vec<ScoredCandidate> = self
            .data
            .chunks_exact(self.dim)
            .zip(&self.ids)
            .map(|(v, &image_id)| ScoredCandidate {
                image_id,
                score: dot(v, q).clamp(-1.0, 1.0),
            })
            .collect();
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, rank_order);
            all.truncate(k);
        }
        all.sort_unstable_by(rank_order);
        Ok(all)
    }

    /// Score just `ids`; unknown ids are reported instead of scored.
    pub fn score_subset(&self, query: &EmbeddingVector, ids: &[ImageId]) -> Result<SubsetScores, IndexError> {
        self.check_query(query)?;
        if ids.is_empty() {
            return Err(IndexError::EmptyIds);
        }
        let q = query.values();
        let mut scored = Vec::with_capacity(ids.len());
        let mut missing = Vec::new();
        let mut seen = std::collections::HashSet::with_capacity(ids.len());
        for &id in ids {
            if !seen.insert(id) {
                continue;
            }
            match self.positions.get(&id) {
                Some(&pos) => scored.push(ScoredCandidate {
                    image_id: id,
                    score: self.score_at(pos, q),
                }),
                None => missing.push(id),
            }
        }
        if scored.is_empty() {
            return Err(IndexError::AllMissing(missing.len()));
        }
        scored.sort_unstable_by(rank_order);
        Ok(SubsetScores { scored, missing })
    }
}
