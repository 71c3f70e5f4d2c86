//! Conversion of per-segment direct-assessment scores into relative rankings.
//!
//! For every unordered pair of systems that scored the same segment, a pair
//! is emitted iff the score difference is strictly greater than the
//! threshold (25 by convention); the higher-scored hypothesis becomes the
//! "better" one. Output order is deterministic: (language pair, segment id,
//! then the system pair in lexicographic order).

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// One direct-assessment row: a system's scored hypothesis for a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct DaSegment {
    pub lang_pair: String,
    pub seg_id: String,
    pub system: String,
    pub da_score: f64,
    pub source: String,
    pub hypothesis: String,
    pub reference: String,
}

/// One relative-ranking pair with its provenance ids.
#[derive(Debug, Clone, PartialEq)]
pub struct DarrPair {
    pub lang_pair: String,
    pub seg_id: String,
    pub sys_better: String,
    pub sys_worse: String,
    pub source: String,
    pub hyp_better: String,
    pub hyp_worse: String,
    pub reference: String,
}

/// Converts assessment rows into ranking pairs with the strict `> threshold`
/// rule. Duplicate (segment, system) rows are a data error.
pub fn darr_convert(segments: &[DaSegment], threshold: f64) -> Result<Vec<DarrPair>> {
    // group by (lang pair, segment), keeping systems sorted by name
    let mut groups: BTreeMap<(String, String), BTreeMap<String, &DaSegment>> = BTreeMap::new();
    for seg in segments {
        let group = groups
            .entry((seg.lang_pair.clone(), seg.seg_id.clone()))
            .or_default();
        if group.insert(seg.system.clone(), seg).is_some() {
            return Err(Error::Invalid(format!(
                "duplicate assessment for segment {} system {} ({})",
                seg.seg_id, seg.system, seg.lang_pair
            )));
        }
    }
    let mut out = Vec::new();
    for ((lang_pair, seg_id), group) in &groups {
        let rows: Vec<&&DaSegment> = group.values().collect();
        for row in &rows {
            if row.source != rows[0].source || row.reference != rows[0].reference {
                return Err(Error::Invalid(format!(
                    "segment {seg_id} ({lang_pair}) has inconsistent source or reference texts"
                )));
            }
        }
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let (a, b) = (rows[i], rows[j]);
                if (a.da_score - b.da_score).abs() > threshold {
                    // exact ties never pass a nonnegative threshold; the
                    // first-by-name system wins them when threshold < 0
                    let (better, worse) = if a.da_score >= b.da_score { (a, b) } else { (b, a) };
                    out.push(DarrPair {
                        lang_pair: lang_pair.clone(),
                        seg_id: seg_id.clone(),
                        sys_better: better.system.clone(),
                        sys_worse: worse.system.clone(),
                        source: better.source.clone(),
                        hyp_better: better.hypothesis.clone(),
                        hyp_worse: worse.hypothesis.clone(),
                        reference: better.reference.clone(),
                    });
                }
            }
        }
    }
    Ok(out)
}
