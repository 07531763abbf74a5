//! `SSQLEMB1` embedding files.
//!
//! Little-endian, no padding:
//!
//! | offset | size | field                       |
//! |--------|------|-----------------------------|
//! | 0      | 8    | magic `SSQLEMB1`            |
//! | 8      | 4    | dimension `D` (u32)         |
//! | 12     | 8    | record count `N` (u64)      |
//! | 20     | ...  | `N` × (u64 id, `D` × f32)   |
//!
//! Vectors are stored raw, exactly as the embedder produced them.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::EmbeddingVector;
use crate::ImageId;

pub const MAGIC: &[u8; 8] = b"SSQLEMB1";
/// Bytes before the first record.
pub const HEADER_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub image_id: ImageId,
    pub vector: EmbeddingVector,
}

#[derive(Debug, Error)]
pub enum FileError {
    #[error("not an SSQLEMB1 file (bad magic or truncated header)")]
    BadMagic,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("duplicate image id {0}")]
    DuplicateId(ImageId),
    #[error("image id {0} cannot be stored (ids must be non-negative)")]
    InvalidId(String),
    #[error("invalid vector for image {id}: {source}")]
    InvalidVector {
        id: ImageId,
        #[source]
        source: super::VectorError,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FileError + '_ {
    move |source| FileError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Expected file size for `n` records of dimension `dim`.
pub fn file_len(dim: usize, n: usize) -> usize {
    HEADER_LEN + n * (8 + dim * 4)
}

pub fn write_embeddings(path: impl AsRef<Path>, dim: usize, records: &[EmbeddingRecord]) -> Result<(), FileError> {
    let path = path.as_ref();
    let dim_u32 = u32::try_from(dim).map_err(|_| FileError::DimensionMismatch(format!("dimension {dim} too large")))?;
    let mut seen = HashSet::new();
    for rec in records {
        if rec.vector.dim() != dim {
            return Err(FileError::DimensionMismatch(format!(
                "image {} has dimension {}, file dimension is {dim}",
                rec.image_id,
                rec.vector.dim()
            )));
        }
        if rec.image_id < 0 {
            return Err(FileError::InvalidId(rec.image_id.to_string()));
        }
        if !seen.insert(rec.image_id) {
            return Err(FileError::DuplicateId(rec.image_id));
        }
    }
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let mut write = |bytes: &[u8]| out.write_all(bytes).map_err(io_err(path));
    write(MAGIC)?;
    write(&dim_u32.to_le_bytes())?;
    write(&(records.len() as u64).to_le_bytes())?;
    for rec in records {
        write(&(rec.image_id as u64).to_le_bytes())?;
        for v in rec.vector.values() {
            write(&v.to_le_bytes())?;
        }
    }
    out.flush().map_err(io_err(path))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<(usize, Vec<EmbeddingRecord>), FileError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode(&bytes)
}

/// Decode a whole file image. Never returns a partial result.
pub fn decode(bytes: &[u8]) -> Result<(usize, Vec<EmbeddingRecord>), FileError> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(FileError::BadMagic);
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    if dim < 2 {
        return Err(FileError::DimensionMismatch(format!("header dimension {dim} is below 2")));
    }
    let record_len = 8 + dim * 4;
    let body = &bytes[HEADER_LEN..];
    let expected = usize::try_from(count)
        .ok()
        .and_then(|n| n.checked_mul(record_len))
        .ok_or_else(|| FileError::DimensionMismatch(format!("record count {count} overflows")))?;
    if body.len() != expected {
        return Err(FileError::DimensionMismatch(format!(
            "header promises {count} records of dimension {dim} ({expected} bytes), body has {} bytes",
            body.len()
        )));
    }

    let mut seen = HashSet::with_capacity(count as usize);
    let mut records = Vec::with_capacity(count as usize);
    for chunk in body.chunks_exact(record_len) {
        let raw_id = u64::from_le_bytes(chunk[..8].try_into().unwrap());
        let image_id = ImageId::try_from(raw_id).map_err(|_| FileError::InvalidId(raw_id.to_string()))?;
        if !seen.insert(image_id) {
            return Err(FileError::DuplicateId(image_id));
        }
        let values: Vec<f32> = chunk[8..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let vector = EmbeddingVector::new(values).map_err(|source| FileError::InvalidVector { id: image_id, source })?;
        records.push(EmbeddingRecord { image_id, vector });
    }
    Ok((dim, records))
}
