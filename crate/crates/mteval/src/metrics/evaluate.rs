//! Report assembly: scores ranking pairs with a metric, groups them by
//! language pair, and emits correlation rows with optional top-system slices.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::human_scores::{DaSegment, DarrPair};
use crate::metrics::{kendall_tau_like, topn_subset, ScoredPair};
use crate::parallel;

/// One line of an evaluation report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub lang_pair: String,
    /// "all" or "top-N".
    pub slice: String,
    pub pairs: usize,
    pub concordant: usize,
    pub discordant: usize,
    pub tau: f64,
}

/// Per-language-pair correlation rows, optionally sliced to top systems.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    /// Fixed-width table for terminal output.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:<8} {:>7} {:>11} {:>11} {:>8}\n",
            "lang-pair", "slice", "pairs", "concordant", "discordant", "tau"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<10} {:<8} {:>7} {:>11} {:>11} {:>8.4}\n",
                r.lang_pair, r.slice, r.pairs, r.concordant, r.discordant, r.tau
            ));
        }
        out
    }
}

/// Mean assessment score per system, per language pair, best first.
/// Ties order by system name so rankings are deterministic.
pub fn system_rankings_from_da(segments: &[DaSegment]) -> BTreeMap<String, Vec<String>> {
    let mut sums: BTreeMap<String, BTreeMap<String, (f64, usize)>> = BTreeMap::new();
    for seg in segments {
        let entry = sums
            .entry(seg.lang_pair.clone())
            .or_default()
            .entry(seg.system.clone())
            .or_insert((0.0, 0));
        entry.0 += seg.da_score;
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(lang, by_system)| {
            let mut ranked: Vec<(String, f64)> = by_system
                .into_iter()
                .map(|(sys, (sum, n))| (sys, sum / n as f64))
                .collect();
            ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            (lang, ranked.into_iter().map(|(sys, _)| sys).collect())
        })
        .collect()
}

/// Builds the report from already-scored pairs.
pub fn report_from_scored(
    scored: &[ScoredPair],
    topn: Option<(&[usize], &BTreeMap<String, Vec<String>>)>,
) -> Result<EvalReport> {
    let mut by_lang: BTreeMap<String, Vec<ScoredPair>> = BTreeMap::new();
    for pair in scored {
        by_lang.entry(pair.lang_pair.clone()).or_default().push(pair.clone());
    }
    let mut rows = Vec::new();
    for (lang, pairs) in &by_lang {
        let counts = kendall_tau_like(pairs)?;
        rows.push(ReportRow {
            lang_pair: lang.clone(),
            slice: "all".into(),
            pairs: pairs.len(),
            concordant: counts.concordant,
            discordant: counts.discordant,
            tau: counts.tau(),
        });
        if let Some((ns, rankings)) = topn {
            let ranking = rankings.get(lang).ok_or_else(|| {
                crate::error::Error::contract(format!("no system ranking for {lang}"))
            })?;
            for &n in ns {
                let subset = topn_subset(pairs, ranking, n)?;
                if subset.is_empty() {
                    log::warn!("top-{n} slice of {lang} is empty; skipping row");
                    continue;
                }
                let counts = kendall_tau_like(&subset)?;
                rows.push(ReportRow {
                    lang_pair: lang.clone(),
                    slice: format!("top-{n}"),
                    pairs: subset.len(),
                    concordant: counts.concordant,
                    discordant: counts.discordant,
                    tau: counts.tau(),
                });
            }
        }
    }
    Ok(EvalReport { rows })
}

/// Scores both hypotheses of every pair with `metric(source, hypothesis,
/// reference)` (data-parallel) and assembles the report.
pub fn evaluate_metric<F>(
    metric: F,
    darr: &[DarrPair],
    topn: Option<(&[usize], &BTreeMap<String, Vec<String>>)>,
) -> Result<EvalReport>
where
    F: Fn(&str, &str, &str) -> Result<f64> + Sync + Send,
{
    let scored: Result<Vec<ScoredPair>> = parallel::map(darr, |pair| {
        let score_better = metric(&pair.source, &pair.hyp_better, &pair.reference)?;
        let score_worse = metric(&pair.source, &pair.hyp_worse, &pair.reference)?;
        Ok(ScoredPair {
            lang_pair: pair.lang_pair.clone(),
            seg_id: pair.seg_id.clone(),
            sys_better: pair.sys_better.clone(),
            sys_worse: pair.sys_worse.clone(),
            score_better,
            score_worse,
        })
    })
    .into_iter()
    .collect();
    report_from_scored(&scored?, topn)
}
