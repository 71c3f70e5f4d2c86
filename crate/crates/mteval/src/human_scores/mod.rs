//! Construction of human-judgment training targets: edit-rate scores from
//! post-edits, severity-weighted error scores, and relative rankings from
//! direct assessments.

mod darr;
mod mqm;
mod ter;

pub use darr::{darr_convert, DaSegment, DarrPair};
pub use mqm::{mqm_score, normalize_mqm, MqmAnnotation};
pub use ter::{levenshtein, ter, ter_tokens, Shifts};

use crate::error::Result;
use crate::estimator::EvalTuple;

/// One (source, hypothesis, reference, post-edit) record.
#[derive(Debug, Clone, PartialEq)]
pub struct PostEditTuple {
    pub source: String,
    pub hypothesis: String,
    pub reference: String,
    pub post_edit: String,
}

/// Builds regression tuples from post-edited data: the target is the edit
/// rate between each hypothesis and its post-edit (shifts enabled), and the
/// post-edit itself is dropped from the output.
pub fn hter_dataset(tuples: &[PostEditTuple]) -> Result<Vec<EvalTuple>> {
    hter_dataset_with(tuples, Shifts::On)
}

pub fn hter_dataset_with(tuples: &[PostEditTuple], shifts: Shifts) -> Result<Vec<EvalTuple>> {
    tuples
        .iter()
        .map(|t| {
            let score = ter(&t.hypothesis, &t.post_edit, shifts)?;
            Ok(EvalTuple {
                source: t.source.clone(),
                hypothesis: t.hypothesis.clone(),
                reference: t.reference.clone(),
                score,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hter_drops_the_post_edit_and_scores_against_it() {
        let tuples = vec![PostEditTuple {
            source: "der hund".into(),
            hypothesis: "a dog barks".into(),
            reference: "the dog barks".into(),
            post_edit: "the dog barks".into(),
        }];
        let out = hter_dataset(&tuples).unwrap();
        assert_eq!(out.len(), 1);
        // one substitution over three post-edit tokens
        assert!((out[0].score - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(out[0].reference, "the dog barks");
    }
}
