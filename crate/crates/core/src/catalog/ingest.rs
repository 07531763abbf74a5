//! COCO instance-annotation ingestion.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Catalog, CatalogError, DetectionRow, ImageMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestCounts {
    pub images: usize,
    pub objects: usize,
}

#[derive(Deserialize)]
struct CocoDocument {
    images: Vec<CocoImage>,
    annotations: Vec<CocoAnnotation>,
    categories: Vec<CocoCategory>,
}

#[derive(Deserialize)]
struct CocoImage {
    id: i64,
    file_name: String,
    width: i64,
    height: i64,
    #[serde(default)]
    date_captured: Option<String>,
    /// Non-standard; wins over `date_captured` when present.
    #[serde(default)]
    timestamp: Option<i64>,
}

#[derive(Deserialize)]
struct CocoAnnotation {
    id: i64,
    image_id: i64,
    category_id: i64,
    bbox: [f64; 4],
}

#[derive(Deserialize)]
struct CocoCategory {
    id: i64,
    name: String,
}

impl Catalog {
    /// Load a COCO instances file. Image paths are `image_root/file_name`.
    pub fn ingest_annotations(
        &mut self,
        annotation_file: impl AsRef<Path>,
        image_root: impl AsRef<Path>,
    ) -> Result<IngestCounts, CatalogError> {
        let path = annotation_file.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.ingest_coco_json(&text, image_root)
    }

    /// Same as [`Catalog::ingest_annotations`] on an in-memory document.
    /// All-or-nothing: nothing is written unless the whole document validates.
    /// Re-ingesting an image replaces its metadata and all of its detections.
    pub fn ingest_coco_json(
        &mut self,
        json: &str,
        image_root: impl AsRef<Path>,
    ) -> Result<IngestCounts, CatalogError> {
        let doc: CocoDocument = serde_json::from_str(json).map_err(|e| CatalogError::Format(e.to_string()))?;
        let root = image_root.as_ref();

        let categories: HashMap<i64, &str> = doc.categories.iter().map(|c| (c.id, c.name.as_str())).collect();

        let mut images = Vec::with_capacity(doc.images.len());
        let mut image_ids = HashSet::new();
        for img in &doc.images {
            if !image_ids.insert(img.id) {
                return Err(CatalogError::Format(format!("image id {} listed twice", img.id)));
            }
            let timestamp = match (img.timestamp, img.date_captured.as_deref()) {
                (Some(ts), _) => Some(ts),
                (None, Some(date)) => parse_datetime(date),
                (None, None) => None,
            };
            let meta = ImageMeta {
                image_id: img.id,
                file_path: root.join(&img.file_name).to_string_lossy().into_owned(),
                width: img.width,
                height: img.height,
                timestamp,
            };
            super::validate_image(&meta).map_err(|e| CatalogError::Format(e.to_string()))?;
            images.push(meta);
        }

        let mut rows = Vec::with_capacity(doc.annotations.len());
        let mut keys = HashSet::new();
        for ann in &doc.annotations {
            if !image_ids.contains(&ann.image_id) && !self.images.contains_key(&ann.image_id) {
                return Err(CatalogError::Referential(format!(
                    "annotation {} cites unknown image {}",
                    ann.id, ann.image_id
                )));
            }
            let class = categories.get(&ann.category_id).ok_or_else(|| {
                CatalogError::Referential(format!(
                    "annotation {} cites unknown category {}",
                    ann.id, ann.category_id
                ))
            })?;
            let [x, y, w, h] = ann.bbox;
            if w < 0.0 || h < 0.0 {
                return Err(CatalogError::Format(format!("annotation {} has negative box size", ann.id)));
            }
            if !keys.insert((ann.image_id, ann.id)) {
                return Err(CatalogError::Format(format!("annotation id {} listed twice", ann.id)));
            }
            let row = DetectionRow {
                image_id: ann.image_id,
                object_id: ann.id,
                object_class: class.to_string(),
                bbox_xmin: x,
                bbox_xmax: x + w,
                bbox_ymin: y,
                bbox_ymax: y + h,
            };
            super::validate_detection(&row).map_err(|e| CatalogError::Format(e.to_string()))?;
            rows.push(row);
        }

        // Replace listed images wholesale. Annotations for images that were
        // ingested earlier but are not listed again replace only the touched objects.
        for meta in &images {
            self.clear_detections(meta.image_id);
        }
        for row in &rows {
            self.detections.remove(&(row.image_id, row.object_id));
        }
        let counts = IngestCounts {
            images: images.len(),
            objects: rows.len(),
        };
        for meta in images {
            self.images.insert(meta.image_id, meta);
        }
        for row in rows {
            self.detections.insert((row.image_id, row.object_id), row);
        }
        Ok(counts)
    }
}

/// `YYYY-MM-DD HH:MM:SS` (UTC) to unix seconds.
fn parse_datetime(s: &str) -> Option<i64> {
    let s = s.trim();
    let (date, time) = s.split_once([' ', 'T']).unwrap_or((s, "00:00:00"));
    let mut d = date.split('-').map(|p| p.parse::<i64>().ok());
    let (y, m, day) = (d.next()??, d.next()??, d.next()??);
    let mut t = time.split(':').map(|p| p.trim_end_matches('Z').parse::<i64>().ok());
    let (hh, mm) = (t.next()??, t.next()??);
    let ss = t.next().flatten().unwrap_or(0);
    if !(1..=12).contains(&m) || !(1..=31).contains(&day) {
        return None;
    }
    Some(days_from_civil(y, m, day) * 86_400 + hh * 3600 + mm * 60 + ss)
}

// Howard Hinnant's days_from_civil
fn days_from_civil(y: i64, m: i64, d: i64) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = (m + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}
