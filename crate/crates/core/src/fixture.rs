//! A small synthetic corpus: 20 images with detections and captions.
//!
//! Contents are hand-picked so every query family has non-empty answers
//! (count, corner, class pairs, and the umbrella/person/two-cars intersection).
//! Box coordinates come from a seeded generator; image embeddings are stub
//! embeddings of the captions.

use serde_json::json;

use crate::embedding::{stub_embed, EmbeddingRecord};
use crate::ImageId;

pub const WIDTH: i64 = 640;
pub const HEIGHT: i64 = 480;
pub const CLASSES: [&str; 6] = ["person", "umbrella", "car", "horse", "dog", "bicycle"];
const BASE_TIMESTAMP: i64 = 1_600_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Middle,
    TopLeft,
    BottomRight,
}

use Placement::{BottomRight as BR, Middle as M, TopLeft as TL};

pub struct FixtureImage {
    pub id: ImageId,
    pub caption: &'static str,
    pub objects: &'static [(&'static str, Placement)],
}

pub const IMAGES: [FixtureImage; 20] = [
    FixtureImage { id: 1, caption: "a woman with an umbrella next to two cars", objects: &[("person", M), ("umbrella", M), ("car", M), ("car", M)] },
    FixtureImage { id: 2, caption: "woman holding an umbrella on a street with two cars", objects: &[("person", M), ("umbrella", M), ("car", M), ("car", BR)] },
    FixtureImage { id: 3, caption: "two people with an umbrella and two cars", objects: &[("person", M), ("person", M), ("umbrella", M), ("car", M), ("car", M)] },
    FixtureImage { id: 4, caption: "a man with an umbrella near three cars", objects: &[("person", M), ("umbrella", M), ("car", M), ("car", M), ("car", M)] },
    FixtureImage { id: 5, caption: "four horses in a field", objects: &[("horse", M), ("horse", M), ("horse", M), ("horse", M)] },
    FixtureImage { id: 6, caption: "a person riding a horse beside another horse", objects: &[("horse", M), ("horse", M), ("person", M)] },
    FixtureImage { id: 7, caption: "a horse standing next to a car", objects: &[("horse", M), ("car", M)] },
    FixtureImage { id: 8, caption: "a car parked in the bottom right corner", objects: &[("car", BR)] },
    FixtureImage { id: 9, caption: "a car in the top left corner", objects: &[("car", TL)] },
    FixtureImage { id: 10, caption: "four cars in a parking lot", objects: &[("car", M), ("car", M), ("car", BR), ("car", TL)] },
    FixtureImage { id: 11, caption: "a man walking a dog", objects: &[("dog", M), ("person", M)] },
    FixtureImage { id: 12, caption: "a dog in the bottom right corner", objects: &[("dog", BR)] },
    FixtureImage { id: 13, caption: "a person riding a bicycle", objects: &[("bicycle", M), ("person", M)] },
    FixtureImage { id: 14, caption: "a bicycle and a car", objects: &[("bicycle", TL), ("car", M)] },
    FixtureImage { id: 15, caption: "four horses and a rider", objects: &[("horse", M), ("horse", M), ("horse", M), ("horse", BR), ("person", M)] },
    FixtureImage { id: 16, caption: "a red umbrella", objects: &[("umbrella", M)] },
    FixtureImage { id: 17, caption: "a man in a suit crossing the street near a car", objects: &[("person", TL), ("car", BR)] },
    FixtureImage { id: 18, caption: "two cars and a horse", objects: &[("car", M), ("car", M), ("horse", M)] },
    FixtureImage { id: 19, caption: "three people at a table", objects: &[("person", M), ("person", M), ("person", M)] },
    FixtureImage { id: 20, caption: "two dogs and a bicycle", objects: &[("dog", M), ("dog", M), ("bicycle", M)] },
];

pub fn file_name(id: ImageId) -> String {
    format!("{id:06}.png")
}

// splitmix64
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Integer box `[x, y, w, h]` for object `n` of image `id`.
pub fn bbox(id: ImageId, n: usize, placement: Placement) -> [i64; 4] {
    let mut state = (id as u64) << 8 | n as u64;
    let mut pick = |lo: i64, hi: i64| {
        state = mix(state);
        lo + (state % (hi - lo + 1) as u64) as i64
    };
    match placement {
        // x2 > 340 and y1 <= 250, so neither corner predicate holds
        M => [pick(200, 300), pick(60, 250), pick(150, 250), pick(60, 200)],
        TL => [pick(0, 100), pick(0, 100), pick(40, 200), pick(40, 200)],
        BR => [pick(360, 520), pick(350, 400), pick(40, 110), pick(40, 75)],
    }
}

fn category_id(class: &str) -> usize {
    CLASSES.iter().position(|c| *c == class).expect("fixture class") + 1
}

/// COCO instances document for the corpus. Images 19 and 20 have no timestamp.
pub fn coco_json() -> String {
    let images: Vec<_> = IMAGES
        .iter()
        .map(|img| {
            let mut v = json!({
                "id": img.id,
                "file_name": file_name(img.id),
                "width": WIDTH,
                "height": HEIGHT,
            });
            if img.id <= 18 {
                v["timestamp"] = json!(BASE_TIMESTAMP + img.id * 3600);
            }
            v
        })
        .collect();
    let mut annotations = Vec::new();
    for img in &IMAGES {
        for (n, &(class, placement)) in img.objects.iter().enumerate() {
            annotations.push(json!({
                "id": img.id * 100 + n as i64,
                "image_id": img.id,
                "category_id": category_id(class),
                "bbox": bbox(img.id, n, placement),
            }));
        }
    }
    let categories: Vec<_> = CLASSES
        .iter()
        .enumerate()
        .map(|(i, name)| json!({"id": i + 1, "name": name}))
        .collect();
    let doc = json!({"images": images, "annotations": annotations, "categories": categories});
    serde_json::to_string_pretty(&doc).expect("fixture serializes") + "\n"
}

/// Stub embeddings of every caption.
pub fn embedding_records(dim: usize) -> Vec<EmbeddingRecord> {
    IMAGES
        .iter()
        .map(|img| EmbeddingRecord {
            image_id: img.id,
            vector: stub_embed(img.caption, dim).expect("captions have tokens"),
        })
        .collect()
}
