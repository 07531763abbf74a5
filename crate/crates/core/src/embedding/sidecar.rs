//! External embedder process.
//!
//! Protocol: the text plus one `\n` is written to the child's stdin, which is
//! then closed. The child writes a little-endian u32 dimension followed by
//! exactly that many little-endian f32 values to stdout and exits 0.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use thiserror::Error;
use wait_timeout::ChildExt;

use super::EmbeddingVector;

pub const DEFAULT_SIDECAR_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SidecarConfig {
    pub argv: Vec<String>,
    pub timeout: Duration,
}

impl SidecarConfig {
    pub fn new(argv: Vec<String>) -> Self {
        Self {
            argv,
            timeout: DEFAULT_SIDECAR_TIMEOUT,
        }
    }
}

#[derive(Debug, Error)]
pub enum SidecarError {
    #[error("sidecar command is empty")]
    EmptyCommand,
    #[error("failed to launch sidecar `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("sidecar exited with {status}: {stderr}")]
    Exit { status: String, stderr: String },
    #[error("sidecar protocol violation: {0}")]
    Protocol(String),
    #[error("sidecar did not finish within {0:?}")]
    Timeout(Duration),
    #[error("sidecar i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Embed `text` with the configured process; the reply must have dimension `dim`.
pub fn external_embed(config: &SidecarConfig, text: &str, dim: usize) -> Result<EmbeddingVector, SidecarError> {
    let (program, args) = config.argv.split_first().ok_or(SidecarError::EmptyCommand)?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| SidecarError::Spawn {
            command: config.argv.join(" "),
            source,
        })?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let payload = format!("{text}\n");
    // Separate threads so a child that never reads stdin, or floods stdout,
    // cannot deadlock us before the timeout fires.
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(payload.as_bytes());
    });
    let reader = thread::spawn(move || {
        let mut buf = Vec::new();
        stdout.read_to_end(&mut buf).map(|_| buf)
    });
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        String::from_utf8_lossy(&buf).into_owned()
    });

    let status = match child.wait_timeout(config.timeout)? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(SidecarError::Timeout(config.timeout));
        }
    };
    let _ = writer.join();
    let out = reader.join().expect("stdout reader panicked")?;
    let err_text = err_reader.join().unwrap_or_default();

    if !status.success() {
        return Err(SidecarError::Exit {
            status: status.to_string(),
            stderr: err_text.trim().to_string(),
        });
    }
    decode_reply(&out, dim)
}

fn decode_reply(out: &[u8], dim: usize) -> Result<EmbeddingVector, SidecarError> {
    if out.len() < 4 {
        return Err(SidecarError::Protocol(format!("expected a 4-byte header, got {} bytes", out.len())));
    }
    let declared = u32::from_le_bytes(out[..4].try_into().unwrap()) as usize;
    if declared != dim {
        return Err(SidecarError::Protocol(format!("sidecar dimension {declared}, store dimension {dim}")));
    }
    let body = &out[4..];
    if body.len() != declared * 4 {
        return Err(SidecarError::Protocol(format!(
            "expected {} bytes of floats, got {}",
            declared * 4,
            body.len()
        )));
    }
    let values: Vec<f32> = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    EmbeddingVector::new(values).map_err(|e| SidecarError::Protocol(e.to_string()))
}
