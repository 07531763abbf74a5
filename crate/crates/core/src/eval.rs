//! Semantic-only retrieval measured against relational ground truth.
//!
//! A trial issues a text query against the whole index, takes the top k, and
//! succeeds if any returned image is in the ground-truth set computed by SQL.
//! Each ground-truth set is computed twice, by the executor and by the
//! brute-force evaluator, and the run fails if they disagree.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{image_ids_of, reference};
use crate::engine::{Engine, EngineError};
use crate::index::ScoredCandidate;
use crate::parser;
use crate::ImageId;

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_SPATIAL_THRESHOLD: f64 = 340.0;
pub const NUMBER_WORDS: [&str; 10] = ["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Pairs,
    Count,
    Spatial,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Pairs => "pairs",
            Suite::Count => "count",
            Suite::Spatial => "spatial",
        })
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pairs" => Ok(Suite::Pairs),
            "count" => Ok(Suite::Count),
            "spatial" => Ok(Suite::Spatial),
            other => Err(format!("unknown suite `{other}` (expected pairs, count or spatial)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub query_text: String,
    pub ground_truth_size: usize,
    pub topk_ids: Vec<ImageId>,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub suite: Suite,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub per_trial: Vec<Trial>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("ground truth for `{sql}` differs between executor and reference evaluator")]
    OracleMismatch { sql: String },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("count must be between 1 and 10, got {0}")]
    InvalidCount(usize),
}

/// A text query with its ground-truth SQL.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub query_text: String,
    pub sql: String,
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn plural(word: &str, n: usize) -> String {
    if n == 1 {
        word.to_string()
    } else {
        format!("{word}s")
    }
}

/// Unordered pairs of distinct classes.
pub fn pair_specs(classes: &[String]) -> Vec<TrialSpec> {
    let mut out = Vec::new();
    for (i, a) in classes.iter().enumerate() {
        for b in &classes[i + 1..] {
            out.push(TrialSpec {
                query_text: format!("{a} and {b}"),
                sql: format!(
                    "SELECT DISTINCT id FROM objects WHERE class_name = {} INTERSECT SELECT DISTINCT id FROM objects WHERE class_name = {}",
                    quote(a),
                    quote(b)
                ),
            });
        }
    }
    out
}

pub fn count_specs(classes: &[String], max_count: usize) -> Result<Vec<TrialSpec>, EvalError> {
    if !(1..=NUMBER_WORDS.len()).contains(&max_count) {
        return Err(EvalError::InvalidCount(max_count));
    }
    let mut out = Vec::new();
    for class in classes {
        for (n, word) in NUMBER_WORDS.iter().take(max_count).enumerate().map(|(i, w)| (i + 1, w)) {
            out.push(TrialSpec {
                query_text: format!("{word} {}", plural(class, n)),
                sql: format!(
                    "SELECT id, COUNT(*) AS c FROM objects WHERE class_name = {} GROUP BY id HAVING c = {n}",
                    quote(class)
                ),
            });
        }
    }
    Ok(out)
}

pub fn spatial_specs(classes: &[String], threshold: f64) -> Vec<TrialSpec> {
    let t = threshold;
    let mut out = Vec::new();
    for class in classes {
        out.push(TrialSpec {
            query_text: format!("{class} in the bottom right corner"),
            sql: format!(
                "SELECT DISTINCT id FROM objects WHERE class_name = {} AND x1 > {t} AND y1 > {t}",
                quote(class)
            ),
        });
        out.push(TrialSpec {
            query_text: format!("{class} in the top left corner"),
            sql: format!(
                "SELECT DISTINCT id FROM objects WHERE class_name = {} AND x2 < {t} AND y2 < {t}",
                quote(class)
            ),
        });
    }
    out
}

/// Ground truth by the executor, confirmed by the reference evaluator.
pub fn ground_truth(engine: &Engine, sql: &str) -> Result<BTreeSet<ImageId>, EvalError> {
    let catalog = engine.catalog();
    let query = parser::parse_relational(sql).map_err(EngineError::from)?;
    let fast = catalog.execute_query(&query).map_err(EngineError::from)?;
    let slow = reference::evaluate(catalog, &query).map_err(EngineError::from)?;
    let fast_ids: BTreeSet<ImageId> = image_ids_of(&fast).map_err(EngineError::from)?.into_iter().collect();
    let slow_ids: BTreeSet<ImageId> = image_ids_of(&slow).map_err(EngineError::from)?.into_iter().collect();
    if fast_ids != slow_ids || fast.rows.len() != slow.rows.len() {
        return Err(EvalError::OracleMismatch { sql: sql.to_string() });
    }
    Ok(fast_ids)
}

/// Run `specs`; those with empty ground truth are not trials.
pub fn run_suite(engine: &Engine, suite: Suite, specs: &[TrialSpec], k: usize) -> Result<EvalReport, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let mut per_trial = Vec::new();
    for spec in specs {
        let truth = ground_truth(engine, &spec.sql)?;
        if truth.is_empty() {
            continue;
        }
        let topk_ids: Vec<ImageId> = engine.search(&spec.query_text, k)?.iter().map(|c| c.image_id).collect();
        let hit = topk_ids.iter().any(|id| truth.contains(id));
        per_trial.push(Trial {
            query_text: spec.query_text.clone(),
            ground_truth_size: truth.len(),
            topk_ids,
            hit,
        });
    }
    per_trial.sort_by(|a, b| a.query_text.cmp(&b.query_text));
    let trials = per_trial.len();
    let successes = per_trial.iter().filter(|t| t.hit).count();
    Ok(EvalReport {
        suite,
        trials,
        successes,
        success_rate: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
        per_trial,
    })
}

pub fn eval_pairs(engine: &Engine, k: usize) -> Result<EvalReport, EvalError> {
    run_suite(engine, Suite::Pairs, &pair_specs(&engine.catalog().classes()), k)
}

pub fn eval_count(engine: &Engine, classes: &[String], max_count: usize, k: usize) -> Result<EvalReport, EvalError> {
    run_suite(engine, Suite::Count, &count_specs(classes, max_count)?, k)
}

pub fn eval_spatial(engine: &Engine, classes: &[String], k: usize, threshold: f64) -> Result<EvalReport, EvalError> {
    run_suite(engine, Suite::Spatial, &spatial_specs(classes, threshold), k)
}

/// Top-k images for free-text queries that have no relational ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gallery {
    pub query_text: String,
    pub topk: Vec<ScoredCandidate>,
}

pub fn contextual_galleries(engine: &Engine, texts: &[String], k: usize) -> Result<Vec<Gallery>, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    texts
        .iter()
        .map(|t| {
            Ok(Gallery {
                query_text: t.clone(),
                topk: engine.search(t, k)?,
            })
        })
        .collect()
}
