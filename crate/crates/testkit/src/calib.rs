//! A second, index-window model of the calibration loop.
//!
//! Holds the remaining candidates as a half-open window `[lo, hi)` over one
//! sorted array instead of splitting vectors, so it shares no code with the
//! session implementation.

use std::collections::BTreeSet;

pub struct Simulation {
    pub accepted: BTreeSet<i64>,
    /// Probed ids in order, with the answer given.
    pub probes: Vec<(i64, bool)>,
}

pub fn simulate(candidates: &[(i64, f64)], mut relevant: impl FnMut(i64, f64) -> bool) -> Simulation {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let (mut lo, mut hi) = (0usize, sorted.len());
    let mut accepted = BTreeSet::new();
    let mut probes = Vec::new();
    while lo < hi {
        let m = lo + (hi - lo - 1) / 2;
        let (id, score) = sorted[m];
        let yes = relevant(id, score);
        probes.push((id, yes));
        if yes {
            accepted.extend(sorted[lo..=m].iter().map(|c| c.0));
            lo = m + 1;
        } else {
            hi = m;
        }
    }
    Simulation { accepted, probes }
}

/// `floor(log2 n) + 1`, by repeated halving.
pub fn budget(mut n: usize) -> usize {
    let mut q = 0;
    while n > 0 {
        n /= 2;
        q += 1;
    }
    q
}
