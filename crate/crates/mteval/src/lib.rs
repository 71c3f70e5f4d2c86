//! Trainable machine-translation evaluation models at desk scale.
//!
//! Two architectures over a pluggable multi-layer encoder: a regression
//! estimator that predicts a quality score from (source, hypothesis,
//! reference), and a ranking model trained with a dual-anchor triplet margin
//! loss on relative-ranking data. Around them: construction of human-judgment
//! targets (edit-rate, severity-weighted error scores, relative rankings from
//! direct assessments), segment-level rank-correlation evaluation with
//! top-system slicing, lexical baseline metrics, and an ablation harness.

pub mod ablation;
pub mod autodiff;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod embedder;
pub mod encoder;
pub mod estimator;
pub mod human_scores;
pub mod metrics;
pub mod error;
pub mod parallel;
pub mod pooling;
pub mod ranker;
pub mod rng;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};
