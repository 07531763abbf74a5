//! Detection and image metadata storage, plus the relational half of query
//! execution.

mod exec;
mod ingest;
pub mod reference;
pub mod schema;
mod value;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::{self, ParseError, Query};
use crate::ImageId;

pub use ingest::IngestCounts;
pub use value::Value;

/// One detected object (one row of the detection table).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub image_id: ImageId,
    pub object_id: i64,
    pub object_class: String,
    pub bbox_xmin: f64,
    pub bbox_xmax: f64,
    pub bbox_ymin: f64,
    pub bbox_ymax: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub image_id: ImageId,
    pub file_path: String,
    pub width: i64,
    pub height: i64,
    pub timestamp: Option<i64>,
}

/// Output of a relational query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRelation {
    pub column_names: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultRelation {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("malformed annotation document: {0}")]
    Format(String),
    #[error("dangling reference: {0}")]
    Referential(String),
    #[error("invalid row: {0}")]
    InvalidRow(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("base query must not contain SEMANTIC")]
    SemanticNotAllowed,
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("column `{0}` must appear in GROUP BY or be used inside an aggregate")]
    NotGrouped(String),
    #[error("COUNT(*) is not allowed in {0}")]
    MisplacedAggregate(&'static str),
    #[error("set operation operands have {left} and {right} columns")]
    ColumnCountMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdError {
    #[error("relation has no columns")]
    NoColumns,
    #[error("value {value} in id column `{column}` is not an integer")]
    NonIntegerId { column: String, value: String },
}

/// In-memory tables. Reads are `&self`; ingestion needs `&mut self`, so
/// sharing across threads goes through an `RwLock` held by the caller.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    images: BTreeMap<ImageId, ImageMeta>,
    detections: BTreeMap<(ImageId, i64), DetectionRow>,
}

#[derive(Serialize, Deserialize)]
struct CatalogFile {
    format: String,
    images: Vec<ImageMeta>,
    detections: Vec<DetectionRow>,
}

const CATALOG_FORMAT: &str = "ssql-catalog/1";

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn image_count(&self) -> usize {
        self.images.len()
    }

    pub fn detection_count(&self) -> usize {
        self.detections.len()
    }

    pub fn image(&self, id: ImageId) -> Option<&ImageMeta> {
        self.images.get(&id)
    }

    pub fn images(&self) -> impl Iterator<Item = &ImageMeta> {
        self.images.values()
    }

    pub fn detections(&self) -> impl Iterator<Item = &DetectionRow> {
        self.detections.values()
    }

    /// Distinct object classes in ascending order.
    pub fn classes(&self) -> Vec<String> {
        let mut classes: Vec<String> = self.detections.values().map(|d| d.object_class.clone()).collect();
        classes.sort();
        classes.dedup();
        classes
    }

    pub fn insert_image(&mut self, meta: ImageMeta) -> Result<(), CatalogError> {
        validate_image(&meta)?;
        self.images.insert(meta.image_id, meta);
        Ok(())
    }

    /// Insert a detection; the image must already exist.
    pub fn insert_detection(&mut self, row: DetectionRow) -> Result<(), CatalogError> {
        validate_detection(&row)?;
        if !self.images.contains_key(&row.image_id) {
            return Err(CatalogError::Referential(format!(
                "detection {} cites unknown image {}",
                row.object_id, row.image_id
            )));
        }
        let key = (row.image_id, row.object_id);
        if self.detections.contains_key(&key) {
            return Err(CatalogError::InvalidRow(format!(
                "duplicate object {} in image {}",
                row.object_id, row.image_id
            )));
        }
        self.detections.insert(key, row);
        Ok(())
    }

    /// Drop an image's detections (the image row itself stays).
    pub fn clear_detections(&mut self, image_id: ImageId) {
        let keys: Vec<_> = self
            .detections
            .range((image_id, i64::MIN)..=(image_id, i64::MAX))
            .map(|(k, _)| *k)
            .collect();
        for key in keys {
            self.detections.remove(&key);
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: CatalogFile =
            serde_json::from_slice(&bytes).map_err(|e| CatalogError::Format(e.to_string()))?;
        if file.format != CATALOG_FORMAT {
            return Err(CatalogError::Format(format!("unsupported catalog format `{}`", file.format)));
        }
        let mut catalog = Catalog::new();
        for image in file.images {
            catalog.insert_image(image)?;
        }
        for det in file.detections {
            catalog.insert_detection(det)?;
        }
        Ok(catalog)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CatalogError> {
        let path = path.as_ref();
        let file = CatalogFile {
            format: CATALOG_FORMAT.to_string(),
            images: self.images.values().cloned().collect(),
            detections: self.detections.values().cloned().collect(),
        };
        let json = serde_json::to_vec(&file).map_err(|e| CatalogError::Format(e.to_string()))?;
        // write-then-rename so a crashed ingest never leaves a torn file
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, json)
            .and_then(|_| fs::rename(&tmp, path))
            .map_err(|source| CatalogError::Io {
                path: path.display().to_string(),
                source,
            })
    }

    /// Run a relational query given as text. `SEMANTIC` is rejected.
    pub fn execute(&self, base_sql: &str) -> Result<ResultRelation, ExecError> {
        let parsed = parser::parse(base_sql)?;
        if parsed.semantic.is_some() {
            return Err(ExecError::SemanticNotAllowed);
        }
        self.execute_query(&parsed.base)
    }

    pub fn execute_query(&self, query: &Query) -> Result<ResultRelation, ExecError> {
        exec::execute(self, query)
    }

    /// Column names and rows of a stored table, in storage order.
    pub(crate) fn table_rows(&self, table: &schema::TableDef) -> Vec<Vec<Value>> {
        if table.name == schema::OBJECTS.name {
            self.detections
                .values()
                .map(|d| {
                    vec![
                        Value::Int(d.image_id),
                        Value::Int(d.object_id),
                        Value::Text(d.object_class.clone()),
                        Value::Float(d.bbox_xmin),
                        Value::Float(d.bbox_ymin),
                        Value::Float(d.bbox_xmax),
                        Value::Float(d.bbox_ymax),
                    ]
                })
                .collect()
        } else {
            self.images
                .values()
                .map(|m| {
                    vec![
                        Value::Int(m.image_id),
                        Value::Text(m.file_path.clone()),
                        Value::Int(m.width),
                        Value::Int(m.height),
                        m.timestamp.map(Value::Int).unwrap_or(Value::Null),
                    ]
                })
                .collect()
        }
    }
}

fn validate_image(meta: &ImageMeta) -> Result<(), CatalogError> {
    if meta.width <= 0 || meta.height <= 0 {
        return Err(CatalogError::InvalidRow(format!(
            "image {} has non-positive size {}x{}",
            meta.image_id, meta.width, meta.height
        )));
    }
    if meta.file_path.is_empty() {
        return Err(CatalogError::InvalidRow(format!("image {} has an empty file path", meta.image_id)));
    }
    Ok(())
}

fn validate_detection(row: &DetectionRow) -> Result<(), CatalogError> {
    let coords = [row.bbox_xmin, row.bbox_xmax, row.bbox_ymin, row.bbox_ymax];
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(CatalogError::InvalidRow(format!("object {} has a non-finite box", row.object_id)));
    }
    if row.bbox_xmin > row.bbox_xmax || row.bbox_ymin > row.bbox_ymax {
        return Err(CatalogError::InvalidRow(format!(
            "object {} has an inverted box",
            row.object_id
        )));
    }
    Ok(())
}

/// Candidate image ids carried by a relation: the `id` column, else `frame`,
/// else the first column. Duplicates are dropped, first occurrence wins.
pub fn image_ids_of(rel: &ResultRelation) -> Result<Vec<ImageId>, IdError> {
    if rel.column_names.is_empty() {
        return Err(IdError::NoColumns);
    }
    let find = |name: &str| rel.column_names.iter().position(|c| c.eq_ignore_ascii_case(name));
    let col = find("id").or_else(|| find("frame")).unwrap_or(0);
    let mut seen = std::collections::HashSet::new();
    let mut ids = Vec::new();
    for row in &rel.rows {
        let id = row[col].as_int().ok_or_else(|| IdError::NonIntegerId {
            column: rel.column_names[col].clone(),
            value: row[col].to_string(),
        })?;
        if seen.insert(id) {
            ids.push(id);
        }
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(cols: &[&str], rows: Vec<Vec<Value>>) -> ResultRelation {
        ResultRelation {
            column_names: cols.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }

    #[test]
    fn image_ids_dedup_in_order() {
        let r = rel(
            &["id", "c"],
            vec![
                vec![Value::Int(3), Value::Int(4)],
                vec![Value::Int(7), Value::Int(4)],
                vec![Value::Int(3), Value::Int(4)],
            ],
        );
        assert_eq!(image_ids_of(&r).unwrap(), vec![3, 7]);
    }

    #[test]
    fn image_ids_frame_column() {
        let r = rel(&["frame"], vec![vec![Value::Int(9)]]);
        assert_eq!(image_ids_of(&r).unwrap(), vec![9]);
    }

    #[test]
    fn image_ids_reject_text() {
        let r = rel(&["name"], vec![vec![Value::Text("x".into())]]);
        assert!(matches!(image_ids_of(&r), Err(IdError::NonIntegerId { .. })));
    }

    #[test]
    fn image_ids_prefers_id_over_first_column() {
        let r = rel(&["c", "ID"], vec![vec![Value::Int(1), Value::Int(5)]]);
        assert_eq!(image_ids_of(&r).unwrap(), vec![5]);
    }

    #[test]
    fn rejects_inverted_boxes_and_orphans() {
        let mut cat = Catalog::new();
        let det = DetectionRow {
            image_id: 1,
            object_id: 1,
            object_class: "car".into(),
            bbox_xmin: 0.0,
            bbox_xmax: 10.0,
            bbox_ymin: 0.0,
            bbox_ymax: 10.0,
        };
        assert!(matches!(cat.insert_detection(det.clone()), Err(CatalogError::Referential(_))));
        cat.insert_image(ImageMeta {
            image_id: 1,
            file_path: "a.jpg".into(),
            width: 10,
            height: 10,
            timestamp: None,
        })
        .unwrap();
        let mut bad = det.clone();
        bad.bbox_xmin = 20.0;
        assert!(matches!(cat.insert_detection(bad), Err(CatalogError::InvalidRow(_))));
        cat.insert_detection(det.clone()).unwrap();
        assert!(cat.insert_detection(det).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut cat = Catalog::new();
        cat.insert_image(ImageMeta {
            image_id: 4,
            file_path: "x/4.png".into(),
            width: 3,
            height: 2,
            timestamp: Some(1_700_000_000),
        })
        .unwrap();
        let path = dir.path().join("db.json");
        cat.save(&path).unwrap();
        let back = Catalog::load(&path).unwrap();
        assert_eq!(back.image(4), cat.image(4));
    }
}
