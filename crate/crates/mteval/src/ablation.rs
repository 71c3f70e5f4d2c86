//! Ablation comparisons at desk scale.
//!
//! Two controlled experiments: a ranking model trained with and without the
//! source anchor, and an estimator trained with and without the raw source
//! embedding in its feature vector. Both arms share one seed, so they
//! consume identical batch orders and differences are attributable to the
//! architecture change alone.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, EstimatorModel, EvalTuple};
use crate::human_scores::DarrPair;
use crate::metrics::evaluate_metric;
use crate::ranker::{RankQuadruple, RankerConfig, RankerModel};

/// One language pair's correlations under both arms.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub lang_pair: String,
    pub pairs: usize,
    pub tau_ref_only: f64,
    pub tau_full: f64,
    pub delta_tau: f64,
}

/// Result of the source-anchor ablation.
#[derive(Debug, Clone)]
pub struct SourceAblationReport {
    pub rows: Vec<AblationRow>,
    pub batch_orders_ref_only: Vec<Vec<usize>>,
    pub batch_orders_full: Vec<Vec<usize>>,
}

fn train_arm(cfg: RankerConfig, train: &[RankQuadruple]) -> Result<(RankerModel, Vec<Vec<usize>>)> {
    let mut model = RankerModel::new(cfg)?;
    let log = model.train(train)?;
    Ok((model, log.batch_orders))
}

/// Trains a reference-only and a source+reference ranker from the same seed
/// and data, evaluates both on `test`, and reports per-pair Δτ
/// (τ_full − τ_ref-only).
pub fn run_source_ablation(
    base: &RankerConfig,
    train: &[RankQuadruple],
    test: &[DarrPair],
) -> Result<SourceAblationReport> {
    if test.is_empty() {
        return Err(Error::contract("source ablation needs test pairs"));
    }
    let ref_cfg = RankerConfig {
        reference_only: true,
        ..base.clone()
    };
    let full_cfg = RankerConfig {
        reference_only: false,
        ..base.clone()
    };

    // The arms are independent; train them on separate threads.
    let (ref_arm, full_arm) = std::thread::scope(|scope| {
        let ref_handle = scope.spawn(|| train_arm(ref_cfg, train));
        let full_handle = scope.spawn(|| train_arm(full_cfg, train));
        (
            ref_handle.join().expect("reference-only arm panicked"),
            full_handle.join().expect("full arm panicked"),
        )
    });
    let (ref_model, ref_orders) = ref_arm?;
    let (full_model, full_orders) = full_arm?;

    let ref_report = evaluate_metric(|s, h, r| ref_model.score_one(s, h, r), test, None)?;
    let full_report = evaluate_metric(|s, h, r| full_model.score_one(s, h, r), test, None)?;

    let ref_taus: BTreeMap<&str, (usize, f64)> = ref_report
        .rows
        .iter()
        .map(|r| (r.lang_pair.as_str(), (r.pairs, r.tau)))
        .collect();
    let mut rows = Vec::new();
    for full_row in &full_report.rows {
        let (pairs, tau_ref) = ref_taus
            .get(full_row.lang_pair.as_str())
            .copied()
            .expect("both arms see the same language pairs");
        debug_assert_eq!(pairs, full_row.pairs);
        rows.push(AblationRow {
            lang_pair: full_row.lang_pair.clone(),
            pairs,
            tau_ref_only: tau_ref,
            tau_full: full_row.tau,
            delta_tau: full_row.tau - tau_ref,
        });
    }
    Ok(SourceAblationReport {
        rows,
        batch_orders_ref_only: ref_orders,
        batch_orders_full: full_orders,
    })
}

/// Result of the estimator feature-vector ablation.
#[derive(Debug, Clone)]
pub struct EstimatorVariantReport {
    /// Held-out MSE without the raw source embedding (6d features).
    pub mse_excluded: f64,
    /// Held-out MSE with it (7d features).
    pub mse_included: f64,
    pub rows: Vec<AblationRow>,
}

fn heldout_mse(model: &EstimatorModel, heldout: &[EvalTuple]) -> Result<f64> {
    let preds = model.predict(heldout)?;
    Ok(heldout
        .iter()
        .zip(&preds)
        .map(|(t, p)| (p - t.score) * (p - t.score))
        .sum::<f64>()
        / heldout.len() as f64)
}

/// Trains 6d-feature and 7d-feature estimators from the same seed and
/// reports held-out MSE for both plus per-pair τ deltas on `test`
/// (positive Δτ favors the 7d variant).
pub fn run_estimator_source_variant(
    base: &EstimatorConfig,
    train: &[EvalTuple],
    heldout: &[EvalTuple],
    test: &[DarrPair],
) -> Result<EstimatorVariantReport> {
    if heldout.is_empty() {
        return Err(Error::contract("estimator variant needs held-out tuples"));
    }
    let excluded_cfg = EstimatorConfig {
        include_source_embedding: false,
        ..base.clone()
    };
    let included_cfg = EstimatorConfig {
        include_source_embedding: true,
        ..base.clone()
    };
    let (excluded, included) = std::thread::scope(|scope| {
        let a = scope.spawn(|| {
            let mut m = EstimatorModel::new(excluded_cfg)?;
            m.train(train)?;
            Ok::<_, Error>(m)
        });
        let b = scope.spawn(|| {
            let mut m = EstimatorModel::new(included_cfg)?;
            m.train(train)?;
            Ok::<_, Error>(m)
        });
        (a.join().expect("6d arm panicked"), b.join().expect("7d arm panicked"))
    });
    let excluded = excluded?;
    let included = included?;

    let mse_excluded = heldout_mse(&excluded, heldout)?;
    let mse_included = heldout_mse(&included, heldout)?;

    let mut rows = Vec::new();
    if !test.is_empty() {
        let base_report =
            evaluate_metric(|s, h, r| excluded.predict_one(s, h, r), test, None)?;
        let variant_report =
            evaluate_metric(|s, h, r| included.predict_one(s, h, r), test, None)?;
        for (b, v) in base_report.rows.iter().zip(&variant_report.rows) {
            rows.push(AblationRow {
                lang_pair: b.lang_pair.clone(),
                pairs: b.pairs,
                tau_ref_only: b.tau,
                tau_full: v.tau,
                delta_tau: v.tau - b.tau,
            });
        }
    }
    Ok(EstimatorVariantReport {
        mse_excluded,
        mse_included,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{EncoderConfig, EncoderKind};

    fn tiny_base() -> RankerConfig {
        RankerConfig {
            encoder: EncoderConfig {
                vocab_size: 64,
                d: 8,
                layers: 1,
                heads: 2,
                ff: 16,
                dropout: 0.0,
                kind: EncoderKind::Transformer,
            },
            layer_dropout: 0.0,
            margin: 1.0,
            lr: 1e-3,
            epochs: 2,
            batch_size: 4,
            reference_only: false,
            seed: 3,
        }
    }

    fn toy_data() -> (Vec<RankQuadruple>, Vec<DarrPair>) {
        let train: Vec<RankQuadruple> = (0..8)
            .map(|i| RankQuadruple {
                source: format!("source text {i}"),
                better: format!("good translation {i}"),
                worse: format!("qq zz ww {i}"),
                reference: format!("good translation here {i}"),
            })
            .collect();
        let test: Vec<DarrPair> = (0..6)
            .map(|i| DarrPair {
                lang_pair: if i % 2 == 0 { "aa-bb" } else { "cc-dd" }.into(),
                seg_id: format!("{i}"),
                sys_better: "s1".into(),
                sys_worse: "s2".into(),
                source: format!("source text {i}"),
                hyp_better: format!("good translation {i}"),
                hyp_worse: format!("qq zz ww {i}"),
                reference: format!("good translation here {i}"),
            })
            .collect();
        (train, test)
    }

    #[test]
    fn arms_share_identical_batch_orders() {
        let (train, test) = toy_data();
        let report = run_source_ablation(&tiny_base(), &train, &test).unwrap();
        assert_eq!(report.batch_orders_ref_only, report.batch_orders_full);
        assert_eq!(report.rows.len(), 2);
    }

    #[test]
    fn self_comparison_has_zero_delta() {
        // when the flag changes nothing (same trained model on both sides),
        // every per-pair delta must be exactly zero
        let (train, test) = toy_data();
        let mut model = RankerModel::new(tiny_base()).unwrap();
        model.train(&train).unwrap();
        let first = evaluate_metric(|s, h, r| model.score_one(s, h, r), &test, None).unwrap();
        let second = evaluate_metric(|s, h, r| model.score_one(s, h, r), &test, None).unwrap();
        assert_eq!(first.rows.len(), 2);
        for (a, b) in first.rows.iter().zip(&second.rows) {
            assert_eq!(a.tau - b.tau, 0.0);
            assert_eq!(a.concordant, b.concordant);
        }
    }
}
