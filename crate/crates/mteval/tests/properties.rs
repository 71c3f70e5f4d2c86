//! Property tests for the library's structural invariants.

use proptest::prelude::*;

use mteval::autodiff::{grad_check, Tape, Tensor};
use mteval::human_scores::{ter_tokens, MqmAnnotation, Shifts};
use mteval::metrics::{kendall_tau_like, topn_subset, ScoredPair};
use mteval::pooling::{average_pool, pool_layers};
use mteval::ranker::similarity;
use mteval::text::{tokenize, words, RESERVED};

fn finite_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-5.0f64..5.0, len)
}

fn token_seq() -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(
        proptest::sample::select(vec!["a", "b", "c", "d", "e", "f"]),
        0..8,
    )
    .prop_map(|v| v.into_iter().map(|s| s.to_string()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_sums_to_one_and_is_shift_invariant(vals in finite_vec(5), shift in -20.0f64..20.0) {
        let tape = Tape::disabled();
        let x = Tensor::new(1, 5, vals.clone(), false).unwrap();
        let y = tape.softmax_masked(&x, None).unwrap();
        let total: f64 = y.values().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);

        let shifted_vals: Vec<f64> = vals.iter().map(|v| v + shift).collect();
        let xs = Tensor::new(1, 5, shifted_vals, false).unwrap();
        let ys = tape.softmax_masked(&xs, None).unwrap();
        for (a, b) in y.values().iter().zip(ys.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn masked_softmax_entries_are_exactly_zero(vals in finite_vec(4), keep in 0usize..4) {
        let tape = Tape::disabled();
        let mut mask = [false; 4];
        mask[keep] = true;
        let x = Tensor::new(1, 4, vals, false).unwrap();
        let y = tape.softmax_masked(&x, Some(&mask)).unwrap();
        for (i, v) in y.values().iter().enumerate() {
            if i == keep {
                prop_assert_eq!(*v, 1.0);
            } else {
                prop_assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn average_pool_is_permutation_invariant(rows in proptest::collection::vec(finite_vec(4), 1..6)) {
        let tape = Tape::disabled();
        let n = rows.len();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let x = Tensor::new(n, 4, flat, false).unwrap();
        let base = average_pool(&tape, &x).unwrap().values();

        let mut reversed_rows = rows.clone();
        reversed_rows.reverse();
        let flat_rev: Vec<f64> = reversed_rows.iter().flatten().copied().collect();
        let xr = Tensor::new(n, 4, flat_rev, false).unwrap();
        let rev = average_pool(&tape, &xr).unwrap().values();
        for (a, b) in base.iter().zip(&rev) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pooling_output_scales_exactly_with_powers_of_two(vals in finite_vec(6), mu in -4.0f64..4.0) {
        let tape = Tape::disabled();
        let layers = vec![
            Tensor::new(2, 3, vals.clone(), false).unwrap(),
            Tensor::new(2, 3, vals.iter().map(|v| v * 0.5).collect(), false).unwrap(),
        ];
        let stack = mteval::encoder::LayerStack { layers };
        let alpha = Tensor::row(vec![0.3, -0.2]);
        let one = pool_layers(&tape, &stack, &alpha, &Tensor::scalar(mu), 0.0, mteval::encoder::Mode::Eval, None).unwrap();
        let two = pool_layers(&tape, &stack, &alpha, &Tensor::scalar(2.0 * mu), 0.0, mteval::encoder::Mode::Eval, None).unwrap();
        for (a, b) in two.values().iter().zip(one.values()) {
            prop_assert_eq!(*a, 2.0 * b);
        }
    }

    #[test]
    fn edit_rate_shift_never_hurts_and_identity_is_zero(hyp in token_seq(), tgt in token_seq()) {
        prop_assume!(!tgt.is_empty());
        let with = ter_tokens(&hyp, &tgt, Shifts::On).unwrap();
        let without = ter_tokens(&hyp, &tgt, Shifts::Off).unwrap();
        prop_assert!(with <= without);
        prop_assert!(with >= 0.0);
        prop_assert_eq!(ter_tokens(&tgt, &tgt, Shifts::On).unwrap(), 0.0);
    }

    #[test]
    fn tau_is_bounded_and_negation_flips_it(scores in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..40)) {
        let pairs: Vec<ScoredPair> = scores.iter().enumerate().map(|(i, (a, b))| ScoredPair {
            lang_pair: "xx-yy".into(),
            seg_id: format!("{i}"),
            sys_better: "p".into(),
            sys_worse: "q".into(),
            score_better: *a,
            score_worse: *b,
        }).collect();
        let counts = kendall_tau_like(&pairs).unwrap();
        prop_assert!((-1.0..=1.0).contains(&counts.tau()));

        let has_tie = pairs.iter().any(|p| p.score_better == p.score_worse);
        prop_assume!(!has_tie);
        let negated: Vec<ScoredPair> = pairs.iter().cloned().map(|mut p| {
            p.score_better = -p.score_better;
            p.score_worse = -p.score_worse;
            p
        }).collect();
        let neg_counts = kendall_tau_like(&negated).unwrap();
        prop_assert_eq!(counts.tau(), -neg_counts.tau());
    }

    #[test]
    fn topn_with_every_system_is_identity(n_pairs in 1usize..30) {
        let systems = ["s1", "s2", "s3"];
        let pairs: Vec<ScoredPair> = (0..n_pairs).map(|i| ScoredPair {
            lang_pair: "xx-yy".into(),
            seg_id: format!("{i}"),
            sys_better: systems[i % 3].into(),
            sys_worse: systems[(i + 1) % 3].into(),
            score_better: 1.0,
            score_worse: 0.0,
        }).collect();
        let ranking: Vec<String> = systems.iter().map(|s| s.to_string()).collect();
        prop_assert_eq!(topn_subset(&pairs, &ranking, 3).unwrap(), pairs);
    }

    #[test]
    fn similarity_reverses_distance_order(mut distances in proptest::collection::vec(0.0f64..100.0, 2..20)) {
        distances.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distances.dedup();
        let sims: Vec<f64> = distances.iter().map(|&f| similarity(f).unwrap()).collect();
        for w in sims.windows(2) {
            prop_assert!(w[0] > w[1]);
        }
    }

    #[test]
    fn severity_score_is_antitone(minor in 0u32..10, major in 0u32..10, critical in 0u32..10, len in 1usize..30) {
        let base = MqmAnnotation { minor, major, critical, sentence_length: len };
        let score = mteval::human_scores::mqm_score(&base);
        for bumped in [
            MqmAnnotation { minor: minor + 1, ..base },
            MqmAnnotation { major: major + 1, ..base },
            MqmAnnotation { critical: critical + 1, ..base },
        ] {
            prop_assert!(mteval::human_scores::mqm_score(&bumped) < score);
        }
        let normalized = mteval::human_scores::normalize_mqm(score);
        prop_assert!((0.0..=1.0).contains(&normalized));
    }

    #[test]
    fn tokenizer_is_deterministic_with_sentinels(text in "[a-zA-Z0-9 ,.!?]{1,60}") {
        prop_assume!(!text.trim().is_empty());
        let a = tokenize(&text, 128).unwrap();
        let b = tokenize(&text, 128).unwrap();
        prop_assert_eq!(&a.ids, &b.ids);
        prop_assert_eq!(a.ids.len(), words(&text).len() + 2);
        for &id in &a.ids[1..a.ids.len() - 1] {
            prop_assert!((RESERVED..128).contains(&id));
        }
    }
}

proptest! {
    // gradient checks are comparatively expensive; fewer cases suffice
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn tanh_and_mul_gradients_match_finite_differences(vals in proptest::collection::vec(-2.0f64..2.0, 6)) {
        let point = Tensor::new(1, 6, vals, false).unwrap();
        let f = |tape: &Tape, x: &Tensor| {
            let y = tape.tanh(x)?;
            let sq = tape.mul(&y, &y)?;
            tape.reduce_mean(&sq)
        };
        let report = grad_check(&f, &point, 1e-5, 1e-4).unwrap();
        prop_assert!(report.passed(), "max_rel {}", report.max_rel);
    }

    #[test]
    fn abs_gradient_matches_away_from_kinks(vals in proptest::collection::vec(-2.0f64..2.0, 6)) {
        prop_assume!(vals.iter().all(|v| v.abs() > 1e-3));
        let point = Tensor::new(1, 6, vals, false).unwrap();
        let f = |tape: &Tape, x: &Tensor| {
            let y = tape.abs(x)?;
            tape.reduce_mean(&y)
        };
        let report = grad_check(&f, &point, 1e-5, 1e-4).unwrap();
        prop_assert!(report.passed(), "max_rel {}", report.max_rel);
    }
}
