//! Character n-gram F-score.

use std::collections::HashMap;

use crate::error::{Error, Result};

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut counts: HashMap<&[char], usize> = HashMap::new();
    if chars.len() >= n {
        for window in chars.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

fn strip_whitespace(text: &str) -> Vec<char> {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Character n-gram F_beta over orders 1..=max_n: per-order precisions and
/// recalls are averaged (orders where neither side has n-grams are skipped),
/// then combined as `(1+β²)·P·R / (β²·P + R)`.
pub fn chrf(hypothesis: &str, reference: &str, max_n: usize, beta: f64) -> Result<f64> {
    let ref_chars = strip_whitespace(reference);
    if ref_chars.is_empty() {
        return Err(Error::EmptyInput("reference has no characters".into()));
    }
    let hyp_chars = strip_whitespace(hypothesis);
    if hyp_chars.is_empty() {
        return Ok(0.0);
    }
    let max_n = max_n.max(1);

    let mut precision_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=max_n {
        let hyp_counts = char_ngrams(&hyp_chars, n);
        let ref_counts = char_ngrams(&ref_chars, n);
        let hyp_total: usize = hyp_counts.values().sum();
        let ref_total: usize = ref_counts.values().sum();
        if hyp_total == 0 && ref_total == 0 {
            continue;
        }
        let matched: usize = hyp_counts
            .iter()
            .map(|(gram, count)| (*count).min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
        precision_sum += if hyp_total == 0 { 0.0 } else { matched as f64 / hyp_total as f64 };
        recall_sum += if ref_total == 0 { 0.0 } else { matched as f64 / ref_total as f64 };
        orders += 1;
    }
    if orders == 0 {
        return Ok(0.0);
    }
    let precision = precision_sum / orders as f64;
    let recall = recall_sum / orders as f64;
    if precision == 0.0 && recall == 0.0 {
        return Ok(0.0);
    }
    let b2 = beta * beta;
    Ok((1.0 + b2) * precision * recall / (b2 * precision + recall))
}
