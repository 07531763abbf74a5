//! Embedding vectors and the math the index is built on.
//!
//! Scores are cosine similarities of unit vectors. For unit vectors
//! `‖a − b‖² = 2 − 2·(a·b)`, so ranking by descending similarity is the same as
//! ranking by ascending Euclidean distance.

mod format;
mod sidecar;
mod stub;

pub use format::{decode as decode_embeddings, file_len, read_embeddings, write_embeddings, EmbeddingRecord, FileError, HEADER_LEN, MAGIC};
pub use sidecar::{external_embed, SidecarConfig, SidecarError, DEFAULT_SIDECAR_TIMEOUT};
pub use stub::{stub_embed, tokenize};

use serde::Serialize;
use thiserror::Error;

/// Default dimension of the joint text/image space.
pub const DEFAULT_DIM: usize = 512;

const ZERO_NORM: f64 = 1e-12;
const UNIT_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VectorError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("vector has (near-)zero norm and cannot be normalized")]
    ZeroVector,
    #[error("vector is not unit-normalized")]
    NotNormalized,
    #[error("embedding dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("vector contains non-finite values")]
    NonFinite,
    #[error("text has no tokens to embed")]
    EmptyText,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingVector {
    values: Vec<f32>,
    normalized: bool,
}

impl EmbeddingVector {
    /// A raw (not normalized) vector.
    pub fn new(values: Vec<f32>) -> Result<Self, VectorError> {
        if values.len() < 2 {
            return Err(VectorError::DimensionTooSmall(values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(VectorError::NonFinite);
        }
        Ok(Self {
            values,
            normalized: false,
        })
    }

    /// Wrap values already known to be unit length; checked to 1e-5.
    pub fn new_normalized(values: Vec<f32>) -> Result<Self, VectorError> {
        let mut v = Self::new(values)?;
        if (v.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(VectorError::NotNormalized);
        }
        v.normalized = true;
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
    }
}

pub fn normalize(v: &EmbeddingVector) -> Result<EmbeddingVector, VectorError> {
    let norm = v.norm();
    if norm < ZERO_NORM {
        return Err(VectorError::ZeroVector);
    }
    Ok(EmbeddingVector {
        values: v.values.iter().map(|&x| (x as f64 / norm) as f32).collect(),
        normalized: true,
    })
}

fn check_dims(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<(), VectorError> {
    if a.dim() != b.dim() {
        return Err(VectorError::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(())
}

/// Euclidean distance.
pub fn l2_distance(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, VectorError> {
    check_dims(a, b)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt())
}

/// Cosine similarity of two unit vectors, clamped to [-1, 1].
pub fn similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, VectorError> {
    check_dims(a, b)?;
    if !a.normalized || !b.normalized {
        return Err(VectorError::NotNormalized);
    }
    Ok(dot(&a.values, &b.values).clamp(-1.0, 1.0))
}

/// f64-accumulated dot product.
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}
