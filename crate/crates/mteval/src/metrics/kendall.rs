//! Concordant/discordant pair counting and top-system filtering.

use crate::error::{Error, Result};

/// One ranking pair with the metric scores assigned to both hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub lang_pair: String,
    pub seg_id: String,
    pub sys_better: String,
    pub sys_worse: String,
    pub score_better: f64,
    pub score_worse: f64,
}

/// Concordant/discordant counts with `tau = (C - D) / (C + D)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TauCounts {
    pub concordant: usize,
    pub discordant: usize,
}

impl TauCounts {
    pub fn tau(&self) -> f64 {
        let c = self.concordant as f64;
        let d = self.discordant as f64;
        (c - d) / (c + d)
    }

    pub fn total(&self) -> usize {
        self.concordant + self.discordant
    }
}

/// Counts a pair concordant iff the metric scored the "better" hypothesis
/// strictly higher; ties and reversals are discordant.
pub fn kendall_tau_like(pairs: &[ScoredPair]) -> Result<TauCounts> {
    if pairs.is_empty() {
        return Err(Error::contract("tau needs at least one scored pair"));
    }
    let mut counts = TauCounts {
        concordant: 0,
        discordant: 0,
    };
    for pair in pairs {
        if !pair.score_better.is_finite() || !pair.score_worse.is_finite() {
            return Err(Error::Invalid(format!(
                "non-finite metric score on segment {}",
                pair.seg_id
            )));
        }
        if pair.score_better > pair.score_worse {
            counts.concordant += 1;
        } else {
            counts.discordant += 1;
        }
    }
    Ok(counts)
}

/// Keeps the pairs where both systems sit within the top `n` of `ranking`
/// (best first). The ranking must cover every system that appears.
pub fn topn_subset(pairs: &[ScoredPair], ranking: &[String], n: usize) -> Result<Vec<ScoredPair>> {
    if n < 2 {
        return Err(Error::contract(format!("top-n slicing needs n >= 2, got {n}")));
    }
    let position = |sys: &str| ranking.iter().position(|r| r == sys);
    for pair in pairs {
        for sys in [&pair.sys_better, &pair.sys_worse] {
            if position(sys).is_none() {
                return Err(Error::contract(format!(
                    "system {sys} missing from the ranking"
                )));
            }
        }
    }
    Ok(pairs
        .iter()
        .filter(|p| {
            position(&p.sys_better).unwrap() < n && position(&p.sys_worse).unwrap() < n
        })
        .cloned()
        .collect())
}
