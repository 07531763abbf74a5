//! On-disk form of the synthetic corpus.
//!
//! ```text
//! <dir>/annotations.json   COCO instances
//! <dir>/embeddings.emb     SSQLEMB1, stub embeddings of the captions
//! <dir>/images/NNNNNN.png  solid-colour placeholders
//! ```

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::Context;
use ssql_core::catalog::Catalog;
use ssql_core::embedding::write_embeddings;
use ssql_core::engine::{Embedder, Engine};
use ssql_core::fixture::{self, IMAGES};
use ssql_core::index::FlatIndex;
use ssql_core::ImageId;

pub const DIM: usize = 512;
pub const ANNOTATIONS: &str = "annotations.json";
pub const EMBEDDINGS: &str = "embeddings.emb";
pub const IMAGES_DIR: &str = "images";

pub fn colour(id: ImageId) -> [u8; 3] {
    let h = (id as u32).wrapping_mul(2_654_435_761);
    [(h >> 24) as u8, (h >> 16) as u8, (h >> 8) as u8]
}

pub fn write_png(path: &Path, width: u32, height: u32, rgb: [u8; 3]) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width, height);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header()?;
    let data: Vec<u8> = rgb.iter().copied().cycle().take((width * height * 3) as usize).collect();
    writer.write_image_data(&data)?;
    writer.finish()?;
    Ok(())
}

pub fn write_fixture(dir: &Path) -> anyhow::Result<()> {
    let images = dir.join(IMAGES_DIR);
    fs::create_dir_all(&images)?;
    fs::write(dir.join(ANNOTATIONS), fixture::coco_json())?;
    write_embeddings(dir.join(EMBEDDINGS), DIM, &fixture::embedding_records(DIM))?;
    for img in &IMAGES {
        write_png(
            &images.join(fixture::file_name(img.id)),
            fixture::WIDTH as u32,
            fixture::HEIGHT as u32,
            colour(img.id),
        )?;
    }
    Ok(())
}

/// Stub-embedder engine over a fixture directory.
pub fn fixture_engine(dir: &Path) -> anyhow::Result<Engine> {
    let mut catalog = Catalog::new();
    catalog.ingest_annotations(dir.join(ANNOTATIONS), dir.join(IMAGES_DIR))?;
    let index = FlatIndex::load(dir.join(EMBEDDINGS))?;
    Ok(Engine::new(catalog, index, Embedder::Stub))
}
