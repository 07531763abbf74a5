//! Command-line tool and HTTP service around `ssql-core`.

pub mod api;
pub mod fixture_files;

use std::io::{BufRead, Read, Write};
use std::path::Path;

use anyhow::{bail, Context};
use ssql_core::calibration::SessionStore;
use ssql_core::catalog::Catalog;
use ssql_core::embedding::{read_embeddings, stub_embed, write_embeddings, SidecarConfig};
use ssql_core::engine::{Embedder, Engine, OutcomeKind};
use ssql_core::index::FlatIndex;

/// `stub`, or `cmd` with a shell-style argv.
pub fn parse_embedder(kind: &str, cmd: Option<&str>) -> anyhow::Result<Embedder> {
    match (kind, cmd) {
        ("stub", _) => Ok(Embedder::Stub),
        ("cmd", Some(cmd)) => {
            let argv = shell_words::split(cmd).context("bad --embedder-cmd")?;
            if argv.is_empty() {
                bail!("--embedder-cmd is empty");
            }
            Ok(Embedder::External(SidecarConfig::new(argv)))
        }
        ("cmd", None) => bail!("--embedder cmd needs --embedder-cmd"),
        (other, _) => bail!("unknown embedder `{other}` (expected stub or cmd)"),
    }
}

pub fn load_catalog(db: &Path) -> anyhow::Result<Catalog> {
    Catalog::load(db).with_context(|| format!("loading database {}", db.display()))
}

pub fn load_engine(db: &Path, index: &Path, embedder: Embedder) -> anyhow::Result<Engine> {
    let catalog = load_catalog(db)?;
    let index = FlatIndex::load(index).with_context(|| format!("loading index {}", index.display()))?;
    Ok(Engine::new(catalog, index, embedder))
}

/// Ingest a COCO file into `db`, creating it if needed.
pub fn ingest_detections(coco: &Path, images_root: &Path, db: &Path) -> anyhow::Result<String> {
    let mut catalog = if db.exists() { load_catalog(db)? } else { Catalog::new() };
    let counts = catalog.ingest_annotations(coco, images_root)?;
    catalog.save(db)?;
    Ok(format!(
        "{} images, {} detections ingested; database has {} images, {} detections",
        counts.images,
        counts.objects,
        catalog.image_count(),
        catalog.detection_count()
    ))
}

/// Merge an SSQLEMB1 file into the index at `index_path`. Records in `file` win.
pub fn ingest_embeddings(file: &Path, index_path: &Path) -> anyhow::Result<String> {
    let (dim, incoming) = read_embeddings(file).with_context(|| format!("reading {}", file.display()))?;
    // rejects zero vectors before anything is written
    FlatIndex::build(dim, &incoming)?;
    let mut records = if index_path.exists() {
        let (existing_dim, existing) = read_embeddings(index_path).with_context(|| format!("reading {}", index_path.display()))?;
        if existing_dim != dim {
            bail!("index has dimension {existing_dim}, file has dimension {dim}");
        }
        existing
    } else {
        Vec::new()
    };
    let replaced: std::collections::HashSet<_> = incoming.iter().map(|r| r.image_id).collect();
    records.retain(|r| !replaced.contains(&r.image_id));
    records.extend(incoming);
    records.sort_by_key(|r| r.image_id);
    write_embeddings(index_path, dim, &records)?;
    Ok(format!("{} vectors ingested; index has {} vectors of dimension {dim}", replaced.len(), records.len()))
}

/// Run one query in terminal mode. Probes are shown as file paths; answers are
/// read as `y`/`n` lines from `input`.
pub fn run_terminal(engine: &Engine, ssql: &str, input: &mut dyn BufRead, out: &mut dyn Write) -> anyhow::Result<()> {
    let store = SessionStore::new();
    let outcome = engine.run(ssql, &store)?;
    if !outcome.missing_ids.is_empty() {
        writeln!(out, "note: {} candidates have no embedding: {:?}", outcome.missing_ids.len(), outcome.missing_ids)?;
    }
    match outcome.kind {
        OutcomeKind::Relation => {
            let rel = outcome.relation.expect("relation outcome");
            writeln!(out, "{}", rel.column_names.join("\t"))?;
            for row in &rel.rows {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}", cells.join("\t"))?;
            }
            writeln!(out, "({} rows)", rel.rows.len())?;
        }
        OutcomeKind::TopK => {
            for c in outcome.topk.expect("topk outcome") {
                writeln!(out, "{}\t{:.6}", c.image_id, c.score)?;
            }
        }
        OutcomeKind::CalibrationStarted => {
            let id = outcome.session_id.expect("session id");
            writeln!(out, "{} candidates; answer y or n", outcome.candidate_count)?;
            let mut line = String::new();
            loop {
                let session = store.get(&id)?;
                let Some(probe) = session.pending_probe() else { break };
                let path = engine.catalog().image(probe).map(|m| m.file_path.as_str()).unwrap_or("?");
                write!(out, "[{}] {path} relevant? ", session.questions().len() + 1)?;
                out.flush()?;
                line.clear();
                if input.read_line(&mut line)? == 0 {
                    bail!("input ended before calibration finished");
                }
                match line.trim().to_ascii_lowercase().as_str() {
                    "y" | "yes" => store.answer(&id, true)?,
                    "n" | "no" => store.answer(&id, false)?,
                    _ => {
                        writeln!(out, "please answer y or n")?;
                        continue;
                    }
                };
            }
            let results = store.get(&id)?.results()?;
            writeln!(out, "{} images accepted", results.len())?;
            for c in results {
                writeln!(out, "{}\t{:.6}", c.image_id, c.score)?;
            }
        }
    }
    Ok(())
}

/// A sidecar speaking the external-embedder protocol, backed by the stub.
pub fn stub_sidecar(dim: usize, input: &mut dyn Read, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let text = text.strip_suffix('\n').unwrap_or(&text);
    let v = stub_embed(text, dim)?;
    out.write_all(&u32::try_from(dim)?.to_le_bytes())?;
    for x in v.values() {
        out.write_all(&x.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}
