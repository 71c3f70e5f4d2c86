//! Synthetic corpora for tests, benches, and the ablation harness.
//!
//! All generators draw from the data-generation stream of the given seed,
//! so corpora are reproducible from (generator, seed) alone.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::estimator::EvalTuple;
use crate::human_scores::DarrPair;
use crate::ranker::RankQuadruple;
use crate::rng::{stream, Stream};
use crate::text::words;

fn word_pool(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn sentence(rng: &mut ChaCha8Rng, pool: &[String], len: usize) -> Vec<String> {
    (0..len).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect()
}

/// Replaces `count` random positions with random pool words.
fn noise(rng: &mut ChaCha8Rng, tokens: &[String], pool: &[String], count: usize) -> Vec<String> {
    let mut out = tokens.to_vec();
    for _ in 0..count {
        let pos = rng.gen_range(0..out.len());
        out[pos] = pool[rng.gen_range(0..pool.len())].clone();
    }
    out
}

/// Maps target-language words onto a disjoint "source-language" vocabulary,
/// preserving order: `w7 tree` becomes `sw7 stree`.
fn to_source_language(tokens: &[String]) -> Vec<String> {
    tokens.iter().map(|w| format!("s{w}")).collect()
}

/// A separable ranking corpus: each reference is a random sentence, the
/// better hypothesis is a lightly noised copy of it, the worse one is a
/// token-shuffled distractor drawn from a different sentence, and the source
/// is the reference mapped into a disjoint source vocabulary.
pub fn separable_ranking_corpus(n: usize, seed: u64) -> Vec<RankQuadruple> {
    let mut rng = stream(seed, Stream::DataGen);
    let pool = word_pool("w", 40);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(5..=9);
            let reference = sentence(&mut rng, &pool, len);
            let better = noise(&mut rng, &reference, &pool, 1);
            let worse_len = rng.gen_range(5..=9);
            let mut worse = sentence(&mut rng, &pool, worse_len);
            worse.shuffle(&mut rng);
            let source = to_source_language(&reference);
            RankQuadruple {
                source: source.join(" "),
                better: better.join(" "),
                worse: worse.join(" "),
                reference: reference.join(" "),
            }
        })
        .collect()
}

/// Ranking pairs where only the source separates the hypotheses: the better
/// hypothesis mirrors the source content, the worse one is a shuffled
/// distractor, and the reference is an unrelated sentence carrying no
/// signal. `lang_pairs` names the test groups to spread pairs over.
pub fn source_only_corpus(
    n: usize,
    seed: u64,
    lang_pairs: &[&str],
) -> (Vec<RankQuadruple>, Vec<DarrPair>) {
    let mut rng = stream(seed, Stream::DataGen);
    let content_pool = word_pool("w", 40);
    let filler_pool = word_pool("f", 40);
    let mut quads = Vec::with_capacity(n);
    let mut pairs = Vec::with_capacity(n);
    for i in 0..n {
        let len = rng.gen_range(5..=9);
        let content = sentence(&mut rng, &content_pool, len);
        let source = to_source_language(&content);
        let better = noise(&mut rng, &content, &content_pool, 1);
        let worse_len = rng.gen_range(5..=9);
        let mut worse = sentence(&mut rng, &content_pool, worse_len);
        worse.shuffle(&mut rng);
        // the reference is filler text unrelated to either hypothesis
        let ref_len = rng.gen_range(5..=9);
        let reference = sentence(&mut rng, &filler_pool, ref_len);
        let quad = RankQuadruple {
            source: source.join(" "),
            better: better.join(" "),
            worse: worse.join(" "),
            reference: reference.join(" "),
        };
        let lang = lang_pairs[i % lang_pairs.len()];
        pairs.push(DarrPair {
            lang_pair: lang.to_string(),
            seg_id: format!("{i}"),
            sys_better: "good-system".into(),
            sys_worse: "bad-system".into(),
            source: quad.source.clone(),
            hyp_better: quad.better.clone(),
            hyp_worse: quad.worse.clone(),
            reference: quad.reference.clone(),
        });
        quads.push(quad);
    }
    (quads, pairs)
}

/// Unigram F1 between two token lists; 1.0 when both are identical bags.
pub fn lexical_overlap(hypothesis: &str, reference: &str) -> f64 {
    let h = words(hypothesis);
    let r = words(reference);
    if h.is_empty() || r.is_empty() {
        return 0.0;
    }
    let mut matched = 0usize;
    let mut remaining = r.clone();
    for w in &h {
        if let Some(pos) = remaining.iter().position(|x| x == w) {
            remaining.swap_remove(pos);
            matched += 1;
        }
    }
    let p = matched as f64 / h.len() as f64;
    let q = matched as f64 / r.len() as f64;
    if p + q == 0.0 {
        0.0
    } else {
        2.0 * p * q / (p + q)
    }
}

/// A regression corpus whose target is a deterministic lexical-overlap
/// function of (hypothesis, reference).
pub fn overlap_regression_corpus(n: usize, seed: u64) -> Vec<EvalTuple> {
    let mut rng = stream(seed, Stream::DataGen);
    let pool = word_pool("w", 40);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(5..=9);
            let reference = sentence(&mut rng, &pool, len);
            // replace 0..=len positions so targets cover the whole range
            let replacements = rng.gen_range(0..=len);
            let hypothesis = noise(&mut rng, &reference, &pool, replacements);
            let source = to_source_language(&reference);
            let score = lexical_overlap(&hypothesis.join(" "), &reference.join(" "));
            EvalTuple {
                source: source.join(" "),
                hypothesis: hypothesis.join(" "),
                reference: reference.join(" "),
                score,
            }
        })
        .collect()
}
