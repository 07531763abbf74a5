//! Random catalogs and vectors.

use rand::seq::index::sample;
use rand::Rng;
use ssql_core::catalog::{Catalog, DetectionRow, ImageMeta};
use ssql_core::embedding::{normalize, EmbeddingVector};

pub const CLASSES: [&str; 5] = ["car", "horse", "person", "dog", "umbrella"];

/// Coordinates on a coarse grid so equality predicates sometimes match.
fn coord<R: Rng>(rng: &mut R, hi: i64) -> f64 {
    let base = rng.random_range(0..hi) as f64;
    if rng.random_bool(0.3) {
        base + 0.5
    } else {
        base
    }
}

/// Both tables hold at most `max_rows` rows.
pub fn random_catalog<R: Rng>(rng: &mut R, max_rows: usize) -> Catalog {
    let mut cat = Catalog::new();
    let n_images = rng.random_range(1..=max_rows.clamp(1, 40));
    let ids: Vec<i64> = sample(rng, 60, n_images).into_iter().map(|i| i as i64 + 1).collect();
    for &id in &ids {
        cat.insert_image(ImageMeta {
            image_id: id,
            file_path: format!("img/{id}.jpg"),
            width: if rng.random_bool(0.5) { 640 } else { 320 },
            height: if rng.random_bool(0.5) { 480 } else { 240 },
            timestamp: rng.random_bool(0.7).then(|| rng.random_range(0..1000)),
        })
        .unwrap();
    }
    let n_det = rng.random_range(0..=max_rows.min(160));
    for object_id in 0..n_det {
        let x1 = coord(rng, 600);
        let y1 = coord(rng, 440);
        cat.insert_detection(DetectionRow {
            image_id: ids[rng.random_range(0..ids.len())],
            object_id: object_id as i64,
            object_class: CLASSES[rng.random_range(0..CLASSES.len())].to_string(),
            bbox_xmin: x1,
            bbox_xmax: x1 + coord(rng, 40),
            bbox_ymin: y1,
            bbox_ymax: y1 + coord(rng, 40),
        })
        .unwrap();
    }
    cat
}

pub fn random_vector<R: Rng>(rng: &mut R, dim: usize) -> EmbeddingVector {
    loop {
        let values: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        if values.iter().any(|v| *v != 0.0) {
            return EmbeddingVector::new(values).unwrap();
        }
    }
}

pub fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> EmbeddingVector {
    normalize(&random_vector(rng, dim)).unwrap()
}
