//! Translation edit rate: word-level edits divided by target length.
//!
//! With shifts disabled this is plain Levenshtein (equal-cost insert, delete,
//! substitute) over the target token count. With shifts enabled, a greedy
//! loop repeatedly applies the block shift (cost 1) that most reduces the
//! remaining edit distance, then adds what is left. Shift search follows the
//! usual tool limits: block length ≤ 10, move distance ≤ 50, at most 50
//! shift iterations.

use crate::error::{Error, Result};
use crate::text::words;

const MAX_SHIFT_LEN: usize = 10;
const MAX_SHIFT_DIST: usize = 50;
const MAX_SHIFT_ITERS: usize = 50;

/// Whether the block-shift edit is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shifts {
    On,
    Off,
}

/// Word-level Levenshtein distance with unit costs.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (n, m) = (a.len(), b.len());
    if n == 0 {
        return m;
    }
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur = vec![0usize; m + 1];
    for i in 1..=n {
        cur[0] = i;
        for j in 1..=m {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Moves the block `[start, start+len)` so it begins at `dest` (an index in
/// the sequence with the block removed).
fn apply_shift<T: Clone>(seq: &[T], start: usize, len: usize, dest: usize) -> Vec<T> {
    let mut rest: Vec<T> = Vec::with_capacity(seq.len() - len);
    rest.extend_from_slice(&seq[..start]);
    rest.extend_from_slice(&seq[start + len..]);
    let mut out = Vec::with_capacity(seq.len());
    out.extend_from_slice(&rest[..dest]);
    out.extend_from_slice(&seq[start..start + len]);
    out.extend_from_slice(&rest[dest..]);
    out
}

/// The single block shift that lowers the edit distance the most, if any
/// lowers it at all. Ties break on (distance, start, len, dest).
fn best_shift(hyp: &[String], target: &[String], current: usize) -> Option<(Vec<String>, usize)> {
    let n = hyp.len();
    let mut best: Option<(usize, Vec<String>)> = None;
    for start in 0..n {
        for len in 1..=MAX_SHIFT_LEN.min(n - start) {
            for dest in 0..=(n - len) {
                if dest == start {
                    continue;
                }
                let moved = dest.abs_diff(start);
                if moved > MAX_SHIFT_DIST {
                    continue;
                }
                let candidate = apply_shift(hyp, start, len, dest);
                let dist = levenshtein(&candidate, target);
                if dist < current && best.as_ref().map_or(true, |(d, _)| dist < *d) {
                    best = Some((dist, candidate));
                }
            }
        }
    }
    best.map(|(d, c)| (c, d))
}

/// Edit rate over pre-tokenized words. The target must be non-empty.
pub fn ter_tokens(hyp: &[String], target: &[String], shifts: Shifts) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::contract("edit rate needs a non-empty target"));
    }
    let mut edits = levenshtein(hyp, target);
    if shifts == Shifts::On {
        let mut current = hyp.to_vec();
        let mut dist = edits;
        let mut shift_count = 0usize;
        for _ in 0..MAX_SHIFT_ITERS {
            // A shift pays 1 edit, so only a strict net win is accepted.
            match best_shift(&current, target, dist) {
                Some((shifted, new_dist)) if shift_count + 1 + new_dist < shift_count + dist => {
                    current = shifted;
                    dist = new_dist;
                    shift_count += 1;
                }
                _ => break,
            }
        }
        edits = shift_count + dist;
    }
    Ok(edits as f64 / target.len() as f64)
}

/// Edit rate over raw text, using the shared word tokenizer.
pub fn ter(hypothesis: &str, target: &str, shifts: Shifts) -> Result<f64> {
    ter_tokens(&words(hypothesis), &words(target), shifts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toks(s: &str) -> Vec<String> {
        words(s)
    }

    #[test]
    fn identical_texts_score_zero() {
        for shifts in [Shifts::On, Shifts::Off] {
            assert_eq!(ter("a b c", "a b c", shifts).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_substitution_over_five() {
        assert_eq!(ter("a b c d e", "a b X d e", Shifts::Off).unwrap(), 0.2);
        assert_eq!(ter("a b c d e", "a b X d e", Shifts::On).unwrap(), 0.2);
    }

    #[test]
    fn swap_costs_one_shift_or_two_substitutions() {
        assert_eq!(ter("b a", "a b", Shifts::On).unwrap(), 0.5);
        assert_eq!(ter("b a", "a b", Shifts::Off).unwrap(), 1.0);
    }

    #[test]
    fn empty_target_is_a_contract_error() {
        assert!(ter("something", "", Shifts::Off).is_err());
    }

    #[test]
    fn shifted_block_longer_than_one() {
        // moving "d e" to the front: 1 shift over 5 tokens
        let rate = ter("c x d e", "d e c x", Shifts::On).unwrap();
        assert_eq!(rate, 0.25);
    }

    #[test]
    fn shifts_never_hurt_on_random_corpora() {
        let mut rng = crate::rng::stream(11, crate::rng::Stream::DataGen);
        let vocab = ["a", "b", "c", "d", "e"];
        for _ in 0..300 {
            let len_h = rng.gen_range(1..=7);
            let len_t = rng.gen_range(1..=7);
            let hyp: Vec<String> = (0..len_h)
                .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
                .collect();
            let tgt: Vec<String> = (0..len_t)
                .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
                .collect();
            let with = ter_tokens(&hyp, &tgt, Shifts::On).unwrap();
            let without = ter_tokens(&hyp, &tgt, Shifts::Off).unwrap();
            assert!(with <= without, "hyp {hyp:?} tgt {tgt:?}: {with} > {without}");
        }
    }

    // Exponential-time reference: minimum edits by exhaustive recursion.
    fn brute_force_edits(a: &[String], b: &[String]) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        let sub = brute_force_edits(&a[1..], &b[1..]) + usize::from(a[0] != b[0]);
        let del = brute_force_edits(&a[1..], b) + 1;
        let ins = brute_force_edits(a, &b[1..]) + 1;
        sub.min(del).min(ins)
    }

    #[test]
    fn shiftless_matches_brute_force_enumeration() {
        let mut rng = crate::rng::stream(13, crate::rng::Stream::DataGen);
        let vocab = ["p", "q", "r", "s"];
        for _ in 0..200 {
            let len_a = rng.gen_range(0..=8);
            let len_b = rng.gen_range(1..=8);
            let a: Vec<String> = (0..len_a)
                .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
                .collect();
            let b: Vec<String> = (0..len_b)
                .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
                .collect();
            let dp = levenshtein(&a, &b);
            assert_eq!(dp, brute_force_edits(&a, &b));
            let rate = ter_tokens(&a, &b, Shifts::Off).unwrap();
            assert_eq!(rate, dp as f64 / b.len() as f64);
        }
    }

    #[test]
    fn rate_can_exceed_one() {
        let rate = ter("w x y z", "a", Shifts::Off).unwrap();
        assert_eq!(rate, 4.0);
        assert_eq!(toks("w x y z").len(), 4);
    }
}
