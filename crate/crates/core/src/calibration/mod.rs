//! Human-in-the-loop threshold search over scored candidates.
//!
//! The session repeatedly shows the candidate at rank `m = floor((n-1)/2)` of
//! the remaining list (best first). "Yes" accepts ranks `0..=m` and continues
//! below them; "no" discards ranks `m..` and continues above. Each answer at
//! least halves the remaining list, so a session asks at most
//! `floor(log2 n) + 1` questions.

mod store;

pub use store::{SessionStore, StoreError, DEFAULT_IDLE_TIMEOUT};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::{rank_order, ScoredCandidate};
use crate::ImageId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalibrationError {
    #[error("no candidates to calibrate over")]
    EmptyCandidates,
    #[error("candidate {0} has a non-finite score")]
    NonFiniteScore(ImageId),
    #[error("candidate {0} appears twice")]
    DuplicateId(ImageId),
    #[error("session is already done")]
    SessionDone,
    #[error("session is still awaiting answers")]
    SessionNotDone,
    #[error("inconsistent session document: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    AwaitingAnswer,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub image_id: ImageId,
    pub relevant: bool,
}

/// Persisted form; also the wire format of [`CalibrationSession`].
#[derive(Serialize, Deserialize)]
struct SessionDoc {
    format: String,
    session_id: String,
    initial_count: usize,
    remaining: Vec<ScoredCandidate>,
    accepted: Vec<ScoredCandidate>,
    questions: Vec<Question>,
    state: SessionState,
    pending_probe: Option<ImageId>,
}

const DOC_FORMAT: &str = "ssql-session/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SessionDoc", try_from = "SessionDoc")]
pub struct CalibrationSession {
    session_id: String,
    initial_count: usize,
    remaining: Vec<ScoredCandidate>,
    accepted: Vec<ScoredCandidate>,
    questions: Vec<Question>,
    state: SessionState,
    pending_probe: Option<ImageId>,
}

/// Rank of the probe in a best-first list of `n > 0` items.
pub fn probe_index(n: usize) -> usize {
    (n - 1) / 2
}

/// The image to ask about next.
pub fn probe_of(remaining: &[ScoredCandidate]) -> Option<ImageId> {
    (!remaining.is_empty()).then(|| remaining[probe_index(remaining.len())].image_id)
}

/// Upper bound on questions for `n` candidates: `floor(log2 n) + 1`.
pub fn question_budget(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        n.ilog2() as usize + 1
    }
}

impl CalibrationSession {
    pub fn start(session_id: impl Into<String>, candidates: &[ScoredCandidate]) -> Result<Self, CalibrationError> {
        if candidates.is_empty() {
            return Err(CalibrationError::EmptyCandidates);
        }
        let mut seen = HashSet::with_capacity(candidates.len());
        for c in candidates {
            if !c.score.is_finite() {
                return Err(CalibrationError::NonFiniteScore(c.image_id));
            }
            if !seen.insert(c.image_id) {
                return Err(CalibrationError::DuplicateId(c.image_id));
            }
        }
        let mut remaining = candidates.to_vec();
        remaining.sort_by(rank_order);
        Ok(Self {
            session_id: session_id.into(),
            initial_count: remaining.len(),
            pending_probe: probe_of(&remaining),
            remaining,
            accepted: Vec::new(),
            questions: Vec::new(),
            state: SessionState::AwaitingAnswer,
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn initial_count(&self) -> usize {
        self.initial_count
    }

    pub fn remaining(&self) -> &[ScoredCandidate] {
        &self.remaining
    }

    pub fn accepted(&self) -> &[ScoredCandidate] {
        &self.accepted
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn is_done(&self) -> bool {
        self.state == SessionState::Done
    }

    pub fn pending_probe(&self) -> Option<ImageId> {
        self.pending_probe
    }

    /// Record the user's judgement of the pending probe.
    pub fn answer(&mut self, relevant: bool) -> Result<(), CalibrationError> {
        let probe = self.pending_probe.ok_or(CalibrationError::SessionDone)?;
        let m = probe_index(self.remaining.len());
        if relevant {
            let below = self.remaining.split_off(m + 1);
            self.accepted.append(&mut self.remaining);
            self.remaining = below;
        } else {
            self.remaining.truncate(m);
        }
        self.questions.push(Question {
            image_id: probe,
            relevant,
        });
        self.pending_probe = probe_of(&self.remaining);
        if self.remaining.is_empty() {
            self.state = SessionState::Done;
        }
        Ok(())
    }

    /// Accepted candidates, best first.
    pub fn results(&self) -> Result<Vec<ScoredCandidate>, CalibrationError> {
        if !self.is_done() {
            return Err(CalibrationError::SessionNotDone);
        }
        let mut out = self.accepted.clone();
        out.sort_by(rank_order);
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("session serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CalibrationError> {
        serde_json::from_str(text).map_err(|e| CalibrationError::Corrupt(e.to_string()))
    }
}

impl From<CalibrationSession> for SessionDoc {
    fn from(s: CalibrationSession) -> Self {
        SessionDoc {
            format: DOC_FORMAT.to_string(),
            session_id: s.session_id,
            initial_count: s.initial_count,
            remaining: s.remaining,
            accepted: s.accepted,
            questions: s.questions,
            state: s.state,
            pending_probe: s.pending_probe,
        }
    }
}

impl TryFrom<SessionDoc> for CalibrationSession {
    type Error = CalibrationError;

    fn try_from(d: SessionDoc) -> Result<Self, Self::Error> {
        let corrupt = |msg: &str| Err(CalibrationError::Corrupt(msg.to_string()));
        if d.format != DOC_FORMAT {
            return corrupt("unknown format");
        }
        if d.remaining.windows(2).any(|w| rank_order(&w[0], &w[1]).is_ge()) {
            return corrupt("remaining is not in rank order");
        }
        let mut seen = HashSet::new();
        if !d.remaining.iter().chain(&d.accepted).all(|c| c.score.is_finite() && seen.insert(c.image_id)) {
            return corrupt("duplicate or non-finite candidate");
        }
        if seen.len() > d.initial_count || d.initial_count == 0 {
            return corrupt("candidate count exceeds initial count");
        }
        if d.questions.len() > question_budget(d.initial_count) {
            return corrupt("question log exceeds budget");
        }
        if (d.state == SessionState::Done) != d.remaining.is_empty() || d.pending_probe != probe_of(&d.remaining) {
            return corrupt("state does not match remaining candidates");
        }
        Ok(Self {
            session_id: d.session_id,
            initial_count: d.initial_count,
            remaining: d.remaining,
            accepted: d.accepted,
            questions: d.questions,
            state: d.state,
            pending_probe: d.pending_probe,
        })
    }
}
