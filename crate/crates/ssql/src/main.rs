use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ssql::api::{router, AppState};
use ssql::{fixture_files, parse_embedder};
use ssql_core::calibration::SessionStore;
use ssql_core::eval::{self, Suite, DEFAULT_K, DEFAULT_SPATIAL_THRESHOLD};

#[derive(Parser)]
#[command(name = "ssql", version, about = "Hybrid relational + semantic image queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct EmbedderArgs {
    /// stub or cmd
    #[arg(long, default_value = "stub")]
    embedder: String,
    /// Sidecar command line, shell-quoted
    #[arg(long)]
    embedder_cmd: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API
    Serve {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        images_root: Option<PathBuf>,
        #[command(flatten)]
        embedder: EmbedderArgs,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        cors_origin: Option<String>,
        /// Keep sessions on disk so they survive restarts
        #[arg(long)]
        sessions_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 3600)]
        session_ttl_secs: u64,
    },
    /// Load COCO-style annotations into the database
    IngestDetections {
        #[arg(long)]
        coco: PathBuf,
        #[arg(long)]
        images_root: PathBuf,
        #[arg(long)]
        db: PathBuf,
    },
    /// Merge an SSQLEMB1 file into the vector index
    IngestEmbeddings {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        index: PathBuf,
    },
    /// Run one query; calibration questions are asked on the terminal
    Query {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[command(flatten)]
        embedder: EmbedderArgs,
        ssql: String,
    },
    /// Semantic-only retrieval against SQL ground truth
    Eval {
        #[arg(long)]
        suite: Suite,
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SPATIAL_THRESHOLD)]
        spatial_threshold: f64,
        /// Comma-separated; default is every class in the database
        #[arg(long, value_delimiter = ',')]
        classes: Vec<String>,
        #[arg(long, default_value_t = 10)]
        max_count: usize,
        #[command(flatten)]
        embedder: EmbedderArgs,
    },
    /// Write the 20-image synthetic corpus
    Fixture {
        #[arg(long)]
        out: PathBuf,
    },
    /// Embedding sidecar backed by the stub embedder
    StubSidecar {
        #[arg(long, default_value_t = fixture_files::DIM)]
        dim: usize,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Serve {
            db,
            index,
            images_root,
            embedder,
            host,
            port,
            cors_origin,
            sessions_dir,
            session_ttl_secs,
        } => {
            let embedder = parse_embedder(&embedder.embedder, embedder.embedder_cmd.as_deref())?;
            let engine = ssql::load_engine(&db, &index, embedder)?;
            let sessions = match sessions_dir {
                Some(dir) => SessionStore::persistent(dir)?,
                None => SessionStore::new(),
            }
            .with_idle_timeout(Duration::from_secs(session_ttl_secs));
            let state = Arc::new(AppState {
                engine,
                sessions,
                images_root,
            });
            let app = router(state.clone(), cors_origin.as_deref())?;
            let addr: SocketAddr = format!("{host}:{port}").parse().context("bad --host/--port")?;
            tokio::runtime::Runtime::new()?.block_on(async move {
                let purge = state.clone();
                tokio::spawn(async move {
                    loop {
                        tokio::time::sleep(Duration::from_secs(60)).await;
                        purge.sessions.purge_expired();
                    }
                });
                let listener = tokio::net::TcpListener::bind(addr).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, app).await?;
                anyhow::Ok(())
            })
        }
        Command::IngestDetections { coco, images_root, db } => {
            println!("{}", ssql::ingest_detections(&coco, &images_root, &db)?);
            Ok(())
        }
        Command::IngestEmbeddings { file, index } => {
            println!("{}", ssql::ingest_embeddings(&file, &index)?);
            Ok(())
        }
        Command::Query { db, index, embedder, ssql } => {
            let embedder = parse_embedder(&embedder.embedder, embedder.embedder_cmd.as_deref())?;
            let engine = ssql::load_engine(&db, &index, embedder)?;
            ssql::run_terminal(&engine, &ssql, &mut io::stdin().lock(), &mut io::stdout().lock())
        }
        Command::Eval {
            suite,
            db,
            index,
            k,
            report,
            spatial_threshold,
            mut classes,
            max_count,
            embedder,
        } => {
            let embedder = parse_embedder(&embedder.embedder, embedder.embedder_cmd.as_deref())?;
            let engine = ssql::load_engine(&db, &index, embedder)?;
            if classes.is_empty() {
                classes = engine.catalog().classes();
            }
            let result = match suite {
                Suite::Pairs => eval::run_suite(&engine, suite, &eval::pair_specs(&classes), k)?,
                Suite::Count => eval::eval_count(&engine, &classes, max_count, k)?,
                Suite::Spatial => eval::eval_spatial(&engine, &classes, k, spatial_threshold)?,
            };
            let json = serde_json::to_string_pretty(&result)? + "\n";
            match report {
                Some(path) => std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{json}"),
            }
            eprintln!("{suite}: {}/{} ({:.3})", result.successes, result.trials, result.success_rate);
            Ok(())
        }
        Command::Fixture { out } => fixture_files::write_fixture(&out),
        Command::StubSidecar { dim } => ssql::stub_sidecar(dim, &mut io::stdin().lock(), &mut io::stdout().lock()),
    }
}
