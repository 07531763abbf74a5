//! Live sessions, optionally mirrored to a directory so they survive restarts.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, TryLockError};
use std::time::{Duration, Instant, SystemTime};

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{CalibrationError, CalibrationSession};
use crate::index::ScoredCandidate;

pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(3600);

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("session `{0}` is handling another answer")]
    Busy(String),
    #[error(transparent)]
    Session(#[from] CalibrationError),
    #[error("session storage i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

struct Slot {
    session: CalibrationSession,
    last_access: Instant,
}

#[derive(Default)]
struct Inner {
    sessions: HashMap<String, Arc<Mutex<Slot>>>,
    created: u64,
}

/// Thread-safe session registry. Each session has its own lock; a second
/// concurrent answer to the same session fails with [`StoreError::Busy`].
pub struct SessionStore {
    dir: Option<PathBuf>,
    idle_timeout: Duration,
    inner: Mutex<Inner>,
}

fn relock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

// ids are hex digests; anything else never touches the filesystem
fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_hexdigit())
}

impl Default for SessionStore {
    fn default() -> Self {
        Self::new()
    }
}

impl SessionStore {
    /// In-memory only.
    pub fn new() -> Self {
        Self {
            dir: None,
            idle_timeout: DEFAULT_IDLE_TIMEOUT,
            inner: Mutex::new(Inner::default()),
        }
    }

    /// Persist every session as `<dir>/<id>.json`.
    pub fn persistent(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self {
            dir: Some(dir),
            ..Self::new()
        })
    }

    pub fn with_idle_timeout(mut self, timeout: Duration) -> Self {
        self.idle_timeout = timeout;
        self
    }

    fn file_of(&self, id: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{id}.json")))
    }

    fn persist(&self, session: &CalibrationSession) -> Result<(), StoreError> {
        let Some(path) = self.file_of(session.session_id()) else {
            return Ok(());
        };
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, session.to_json()).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    fn forget(&self, inner: &mut Inner, id: &str) {
        inner.sessions.remove(id);
        if let Some(path) = self.file_of(id) {
            let _ = fs::remove_file(path);
        }
    }

    /// Derive an id from the candidate list and creation counter, so a
    /// replayed script against a fresh store gets the same ids.
    fn next_id(&self, inner: &mut Inner, candidates: &[ScoredCandidate]) -> String {
        loop {
            inner.created += 1;
            let mut h = Sha256::new();
            h.update(inner.created.to_le_bytes());
            for c in candidates {
                h.update(c.image_id.to_le_bytes());
                h.update(c.score.to_bits().to_le_bytes());
            }
            let id: String = h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect();
            let on_disk = self.file_of(&id).is_some_and(|p| p.exists());
            if !inner.sessions.contains_key(&id) && !on_disk {
                return id;
            }
        }
    }

    /// Start a session over `candidates` and return it.
    pub fn create(&self, candidates: &[ScoredCandidate]) -> Result<CalibrationSession, StoreError> {
        let mut inner = relock(&self.inner);
        let id = self.next_id(&mut inner, candidates);
        let session = CalibrationSession::start(id.clone(), candidates)?;
        self.persist(&session)?;
        inner.sessions.insert(
            id,
            Arc::new(Mutex::new(Slot {
                session: session.clone(),
                last_access: Instant::now(),
            })),
        );
        Ok(session)
    }

    fn slot(&self, id: &str) -> Result<Arc<Mutex<Slot>>, StoreError> {
        let not_found = || StoreError::NotFound(id.to_string());
        if !valid_id(id) {
            return Err(not_found());
        }
        let mut inner = relock(&self.inner);
        if let Some(slot) = inner.sessions.get(id).cloned() {
            // a slot locked by an in-flight answer is by definition not idle
            let idle = match slot.try_lock() {
                Ok(s) => s.last_access.elapsed() > self.idle_timeout,
                Err(_) => false,
            };
            if idle {
                self.forget(&mut inner, id);
                return Err(not_found());
            }
            return Ok(slot);
        }
        let path = self.file_of(id).ok_or_else(not_found)?;
        let Ok(meta) = fs::metadata(&path) else {
            return Err(not_found());
        };
        let age = meta
            .modified()
            .ok()
            .and_then(|t| SystemTime::now().duration_since(t).ok())
            .unwrap_or_default();
        if age > self.idle_timeout {
            self.forget(&mut inner, id);
            return Err(not_found());
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let session = CalibrationSession::from_json(&text)?;
        if session.session_id() != id {
            return Err(not_found());
        }
        let slot = Arc::new(Mutex::new(Slot {
            session,
            last_access: Instant::now(),
        }));
        inner.sessions.insert(id.to_string(), slot.clone());
        Ok(slot)
    }

    /// Snapshot of a session. Does not change session state.
    pub fn get(&self, id: &str) -> Result<CalibrationSession, StoreError> {
        let slot = self.slot(id)?;
        let mut guard = relock(&slot);
        guard.last_access = Instant::now();
        Ok(guard.session.clone())
    }

    /// Apply one answer; returns the updated session.
    pub fn answer(&self, id: &str, relevant: bool) -> Result<CalibrationSession, StoreError> {
        let slot = self.slot(id)?;
        let mut guard = match slot.try_lock() {
            Ok(g) => g,
            Err(TryLockError::WouldBlock) => return Err(StoreError::Busy(id.to_string())),
            Err(TryLockError::Poisoned(e)) => e.into_inner(),
        };
        guard.last_access = Instant::now();
        let mut next = guard.session.clone();
        next.answer(relevant)?;
        self.persist(&next)?;
        guard.session = next.clone();
        Ok(next)
    }

    /// Drop every session idle longer than the timeout; returns how many.
    pub fn purge_expired(&self) -> usize {
        let mut inner = relock(&self.inner);
        let stale: Vec<String> = inner
            .sessions
            .iter()
            .filter(|(_, slot)| slot.try_lock().is_ok_and(|s| s.last_access.elapsed() > self.idle_timeout))
            .map(|(id, _)| id.clone())
            .collect();
        for id in &stale {
            self.forget(&mut inner, id);
        }
        stale.len()
    }

    pub fn len(&self) -> usize {
        relock(&self.inner).sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
