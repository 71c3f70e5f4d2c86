//! Segment-level evaluation: rank correlation over ranking pairs, top-system
//! slicing, and lexical baseline metrics.

mod bleu;
mod chrf;
mod evaluate;
mod kendall;

pub use bleu::sentence_bleu;
pub use chrf::chrf;
pub use evaluate::{
    evaluate_metric, report_from_scored, system_rankings_from_da, EvalReport, ReportRow,
};
pub use kendall::{kendall_tau_like, topn_subset, ScoredPair, TauCounts};
