//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::Context;
use mteval::checkpoint::{self, LoadedModel};
use mteval::config::RunConfig;
use mteval::data;
use mteval::estimator::EstimatorModel;
use mteval::human_scores::{self, darr_convert as convert_da, mqm_score as raw_mqm, normalize_mqm, Shifts};
use mteval::metrics::{self, report_from_scored, system_rankings_from_da, ScoredPair};
use mteval::ranker::RankerModel;

use crate::{peek_header, UsageError};

pub fn train_estimator(config: &Path, data_path: &Path, out: &Path) -> anyhow::Result<()> {
    let cfg = RunConfig::load(config)?;
    let tuples = data::read_eval_tuples(data_path)?;
    let mut model = EstimatorModel::new(cfg.estimator_config())?;
    let log = model.train(&tuples)?;
    checkpoint::save_estimator(out, &model)?;
    println!(
        "trained estimator on {} tuples for {} epochs (final train mse {:.6}); wrote {}",
        tuples.len(),
        log.epoch_mse.len(),
        log.epoch_mse.last().unwrap_or(&f64::NAN),
        out.display()
    );
    Ok(())
}

pub fn train_ranker(config: &Path, data_path: &Path, out: &Path) -> anyhow::Result<()> {
    let cfg = RunConfig::load(config)?;
    let pairs = data::read_darr_pairs(data_path)?;
    let quads = data::darr_to_quadruples(&pairs);
    let mut model = RankerModel::new(cfg.ranker_config())?;
    let log = model.train(&quads)?;
    checkpoint::save_ranker(out, &model)?;
    println!(
        "trained ranker on {} pairs for {} epochs (final train loss {:.6}); wrote {}",
        quads.len(),
        log.epoch_mse.len(),
        log.epoch_mse.last().unwrap_or(&f64::NAN),
        out.display()
    );
    Ok(())
}

fn is_darr_header(header: &str) -> bool {
    header == data::DARR_HEADER.join("\t")
}

pub fn score(model_path: &Path, data_path: &Path, out: &Path, reference_only: bool) -> anyhow::Result<()> {
    let model = checkpoint::load(model_path)?;
    if reference_only && matches!(model, LoadedModel::Estimator(_)) {
        return Err(UsageError("--reference-only applies only to ranking models".into()).into());
    }
    let header = peek_header(data_path)?;
    if is_darr_header(&header) {
        score_darr(&model, data_path, out, reference_only)
    } else {
        score_triples(&model, data_path, out, reference_only)
    }
}

fn score_triple(model: &LoadedModel, reference_only: bool, s: &str, h: &str, r: &str) -> mteval::Result<f64> {
    match model {
        LoadedModel::Estimator(m) => m.predict_one(s, h, r),
        LoadedModel::Ranker(m) => {
            if reference_only {
                m.score_reference_only(h, r)
            } else {
                m.score_one(s, h, r)
            }
        }
    }
}

fn score_triples(model: &LoadedModel, data_path: &Path, out: &Path, reference_only: bool) -> anyhow::Result<()> {
    let triples = data::read_score_input(data_path)?;
    let scores: mteval::Result<Vec<f64>> = mteval::parallel::map(&triples, |(s, h, r)| {
        score_triple(model, reference_only, s, h, r)
    })
    .into_iter()
    .collect();
    let scores = scores?;
    data::write_triple_scores(out, &triples, &scores)?;
    println!("scored {} segments with the {}; wrote {}", triples.len(), model.kind(), out.display());
    Ok(())
}

fn score_darr(model: &LoadedModel, data_path: &Path, out: &Path, reference_only: bool) -> anyhow::Result<()> {
    let pairs = data::read_darr_pairs(data_path)?;
    let scored: mteval::Result<Vec<ScoredPair>> = mteval::parallel::map(&pairs, |p| {
        let score_better = score_triple(model, reference_only, &p.source, &p.hyp_better, &p.reference)?;
        let score_worse = score_triple(model, reference_only, &p.source, &p.hyp_worse, &p.reference)?;
        Ok(ScoredPair {
            lang_pair: p.lang_pair.clone(),
            seg_id: p.seg_id.clone(),
            sys_better: p.sys_better.clone(),
            sys_worse: p.sys_worse.clone(),
            score_better,
            score_worse,
        })
    })
    .into_iter()
    .collect();
    let scored = scored?;
    data::write_pair_scores(out, &scored)?;
    println!("scored {} ranking pairs with the {}; wrote {}", scored.len(), model.kind(), out.display());
    Ok(())
}

pub fn hter(data_path: &Path, out: &Path, no_shifts: bool) -> anyhow::Result<()> {
    let tuples = data::read_pe_tuples(data_path)?;
    let shifts = if no_shifts { Shifts::Off } else { Shifts::On };
    let scored = human_scores::hter_dataset_with(&tuples, shifts)?;
    data::write_eval_tuples(out, &scored)?;
    println!("scored {} post-edited tuples; wrote {}", scored.len(), out.display());
    Ok(())
}

pub fn mqm_score(data_path: &Path, out: &Path) -> anyhow::Result<()> {
    let rows = data::read_mqm_rows(data_path)?;
    let tuples: Vec<mteval::estimator::EvalTuple> = rows
        .into_iter()
        .map(|(mut tuple, ann)| {
            tuple.score = normalize_mqm(raw_mqm(&ann));
            tuple
        })
        .collect();
    data::write_eval_tuples_with_comment(out, &tuples, Some("length-basis: hypothesis tokens"))?;
    println!("scored {} annotated tuples; wrote {}", tuples.len(), out.display());
    Ok(())
}

pub fn darr_convert(data_path: &Path, threshold: f64, out: &Path) -> anyhow::Result<()> {
    let segments = data::read_da_segments(data_path)?;
    let pairs = convert_da(&segments, threshold)?;
    data::write_darr_pairs(out, &pairs)?;
    println!(
        "converted {} assessments into {} ranking pairs (threshold {threshold}); wrote {}",
        segments.len(),
        pairs.len(),
        out.display()
    );
    Ok(())
}

pub enum ScoreSource {
    File(PathBuf),
    Bleu,
    Chrf,
}

pub fn evaluate(
    source: ScoreSource,
    darr_path: &Path,
    top_n: Option<Vec<usize>>,
    da_path: Option<&Path>,
    out: &Path,
) -> anyhow::Result<()> {
    let pairs = data::read_darr_pairs(darr_path)?;
    let scored: Vec<ScoredPair> = match &source {
        ScoreSource::File(path) => {
            let scored = data::read_pair_scores(path)?;
            if scored.len() != pairs.len() {
                anyhow::bail!(
                    "{} has {} rows but {} has {} pairs",
                    path.display(),
                    scored.len(),
                    darr_path.display(),
                    pairs.len()
                );
            }
            for (row, pair) in scored.iter().zip(&pairs) {
                if row.lang_pair != pair.lang_pair
                    || row.seg_id != pair.seg_id
                    || row.sys_better != pair.sys_better
                    || row.sys_worse != pair.sys_worse
                {
                    anyhow::bail!(
                        "score row ({}, {}, {}, {}) does not match ranking pair ({}, {}, {}, {})",
                        row.lang_pair, row.seg_id, row.sys_better, row.sys_worse,
                        pair.lang_pair, pair.seg_id, pair.sys_better, pair.sys_worse
                    );
                }
            }
            scored
        }
        ScoreSource::Bleu => lexical_scores(&pairs, |h, r| metrics::sentence_bleu(h, r, 4))?,
        ScoreSource::Chrf => lexical_scores(&pairs, |h, r| metrics::chrf(h, r, 6, 2.0))?,
    };

    let rankings;
    let topn_arg = match &top_n {
        None => None,
        Some(ns) => {
            let da_path = da_path.ok_or_else(|| {
                UsageError("--top-n needs --da to derive system rankings".into())
            })?;
            let segments = data::read_da_segments(da_path)?;
            rankings = system_rankings_from_da(&segments);
            Some((ns.as_slice(), &rankings))
        }
    };
    let report = report_from_scored(&scored, topn_arg)?;
    data::write_report(out, &report)?;
    print!("{}", report.pretty());
    println!("wrote {}", out.display());
    Ok(())
}

fn lexical_scores<F>(pairs: &[mteval::human_scores::DarrPair], metric: F) -> anyhow::Result<Vec<ScoredPair>>
where
    F: Fn(&str, &str) -> mteval::Result<f64> + Sync + Send,
{
    let scored: mteval::Result<Vec<ScoredPair>> = mteval::parallel::map(pairs, |p| {
        Ok(ScoredPair {
            lang_pair: p.lang_pair.clone(),
            seg_id: p.seg_id.clone(),
            sys_better: p.sys_better.clone(),
            sys_worse: p.sys_worse.clone(),
            score_better: metric(&p.hyp_better, &p.reference)?,
            score_worse: metric(&p.hyp_worse, &p.reference)?,
        })
    })
    .into_iter()
    .collect();
    Ok(scored?)
}

pub fn ablate_source(config: &Path, train: &Path, test: &Path, out: &Path) -> anyhow::Result<()> {
    let cfg = RunConfig::load(config)?;
    let train_pairs = data::read_darr_pairs(train)?;
    let train_quads = data::darr_to_quadruples(&train_pairs);
    let test_pairs = data::read_darr_pairs(test)?;
    let report = mteval::ablation::run_source_ablation(&cfg.ranker_config(), &train_quads, &test_pairs)
        .context("source ablation failed")?;
    data::write_ablation_report(out, &report.rows)?;
    println!(
        "{:<10} {:>7} {:>13} {:>9} {:>10}",
        "lang-pair", "pairs", "tau-ref-only", "tau-full", "delta-tau"
    );
    for row in &report.rows {
        println!(
            "{:<10} {:>7} {:>13.4} {:>9.4} {:>10.4}",
            row.lang_pair, row.pairs, row.tau_ref_only, row.tau_full, row.delta_tau
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}
