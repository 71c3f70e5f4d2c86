//! Smoothed sentence-level n-gram precision score.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::text::words;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

/// Geometric mean of clipped 1..max_n-gram precisions times the brevity
/// penalty, smoothed with add-one on the precisions of order > 1.
pub fn sentence_bleu(hypothesis: &str, reference: &str, max_n: usize) -> Result<f64> {
    let ref_tokens = words(reference);
    if ref_tokens.is_empty() {
        return Err(Error::EmptyInput("reference has no tokens".into()));
    }
    let hyp_tokens = words(hypothesis);
    if hyp_tokens.is_empty() {
        return Ok(0.0);
    }
    let max_n = max_n.max(1);

    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let hyp_counts = ngram_counts(&hyp_tokens, n);
        let ref_counts = ngram_counts(&ref_tokens, n);
        let total: usize = hyp_counts.values().sum();
        let matched: usize = hyp_counts
            .iter()
            .map(|(gram, count)| (*count).min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
        let precision = if n == 1 {
            if total == 0 {
                return Ok(0.0);
            }
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        if precision == 0.0 {
            return Ok(0.0);
        }
        log_sum += precision.ln() / max_n as f64;
    }
    let brevity = if hyp_tokens.len() < ref_tokens.len() {
        (1.0 - ref_tokens.len() as f64 / hyp_tokens.len() as f64).exp()
    } else {
        1.0
    };
    Ok(brevity * log_sum.exp())
}
