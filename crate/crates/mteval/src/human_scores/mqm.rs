//! Severity-weighted error scoring on a 100-point scale.

/// Error counts for one annotated hypothesis, plus its token length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MqmAnnotation {
    pub minor: u32,
    pub major: u32,
    pub critical: u32,
    /// Token count of the hypothesis; must be at least 1.
    pub sentence_length: usize,
}

/// Raw score: `100 − (minor + 5·major + 10·critical) / (length × 100)`.
///
/// The denominator is the sentence length times 100, so penalties are small
/// relative to the 100-point scale; severity weights are fixed at 1/5/10.
pub fn mqm_score(ann: &MqmAnnotation) -> f64 {
    debug_assert!(ann.sentence_length >= 1);
    let penalty = f64::from(ann.minor) + 5.0 * f64::from(ann.major) + 10.0 * f64::from(ann.critical);
    100.0 - penalty / (ann.sentence_length as f64 * 100.0)
}

/// Maps a raw score onto [0, 1]: divides by 100 and truncates at 0.
pub fn normalize_mqm(raw: f64) -> f64 {
    (raw / 100.0).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(minor: u32, major: u32, critical: u32, len: usize) -> MqmAnnotation {
        MqmAnnotation {
            minor,
            major,
            critical,
            sentence_length: len,
        }
    }

    #[test]
    fn perfect_hypothesis_scores_one_hundred() {
        assert_eq!(mqm_score(&ann(0, 0, 0, 7)), 100.0);
    }

    #[test]
    fn single_minor_error_on_one_token() {
        assert!((mqm_score(&ann(1, 0, 0, 1)) - 99.99).abs() < 1e-12);
    }

    #[test]
    fn mixed_severities_direct_substitution() {
        // penalty = 3 + 5 + 20 = 28 over 4 * 100
        let got = mqm_score(&ann(3, 1, 2, 4));
        assert!((got - (100.0 - 28.0 / 400.0)).abs() < 1e-15);
        assert!((got - 99.93).abs() < 1e-12);
    }

    #[test]
    fn score_is_antitone_in_each_count() {
        let base = mqm_score(&ann(1, 1, 1, 5));
        assert!(mqm_score(&ann(2, 1, 1, 5)) < base);
        assert!(mqm_score(&ann(1, 2, 1, 5)) < base);
        assert!(mqm_score(&ann(1, 1, 2, 5)) < base);
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_mqm(100.0), 1.0);
        assert_eq!(normalize_mqm(-50.0), 0.0);
        assert!((normalize_mqm(99.93) - 0.9993).abs() < 1e-15);
    }

    #[test]
    fn normalization_is_idempotent_after_scaling_back() {
        for raw in [100.0, 42.5, 0.0, -3.0] {
            let once = normalize_mqm(raw);
            assert_eq!(normalize_mqm(once * 100.0), once);
        }
    }
}
