//! Quality-score regression over (source, hypothesis, reference).
//!
//! The three segments are encoded independently with the shared encoder and
//! pooling layer; their sentence embeddings are combined into one feature
//! vector that feeds a two-hidden-layer tanh regressor trained with MSE.
//! Training freezes the encoder group (transformer weights and pooling
//! scalars) for the first `frozen_epochs` epochs and then fine-tunes
//! everything with a discriminative encoder learning rate.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{
    adam_step, check_partition, AdamState, Binding, ParamGroup, ParamId, ParamSet, Tape, Tensor,
};
use crate::embedder::SegmentEmbedder;
use crate::encoder::{EncoderConfig, Mode};
use crate::error::{Error, Result};
use crate::pooling::{Segment, SentenceEmbedding};
use crate::rng::{stream, Stream};

/// One (source, hypothesis, reference, score) record.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalTuple {
    pub source: String,
    pub hypothesis: String,
    pub reference: String,
    pub score: f64,
}

impl EvalTuple {
    pub fn validate(&self) -> Result<()> {
        for (name, text) in [
            ("source", &self.source),
            ("hypothesis", &self.hypothesis),
            ("reference", &self.reference),
        ] {
            if text.trim().is_empty() {
                return Err(Error::Invalid(format!("empty {name} text")));
            }
        }
        if !self.score.is_finite() {
            return Err(Error::Invalid(format!("non-finite score {}", self.score)));
        }
        if self.score < 0.0 {
            return Err(Error::Invalid(format!("negative score {}", self.score)));
        }
        Ok(())
    }
}

/// Estimator hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub encoder: EncoderConfig,
    /// Layer-dropout probability of the pooling layer.
    pub layer_dropout: f64,
    /// Regressor hidden widths; `None` scales with the encoder width as
    /// (9d, 4.5d) rounded.
    pub hidden: Option<(usize, usize)>,
    pub head_dropout: f64,
    pub epochs: usize,
    pub frozen_epochs: usize,
    pub lr_head: f64,
    pub lr_encoder: f64,
    pub batch_size: usize,
    /// Ablation flag: also concatenate the raw source embedding (7d input).
    pub include_source_embedding: bool,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            encoder: EncoderConfig::default(),
            layer_dropout: 0.1,
            hidden: None,
            head_dropout: 0.1,
            epochs: 4,
            frozen_epochs: 1,
            lr_head: 3e-5,
            lr_encoder: 1e-5,
            batch_size: 16,
            include_source_embedding: false,
            seed: 3,
        }
    }
}

impl EstimatorConfig {
    pub fn hidden_widths(&self) -> (usize, usize) {
        self.hidden.unwrap_or_else(|| {
            let d = self.encoder.d as f64;
            ((9.0 * d).round() as usize, (4.5 * d).round() as usize)
        })
    }

    pub fn feature_width(&self) -> usize {
        let blocks = if self.include_source_embedding { 7 } else { 6 };
        blocks * self.encoder.d
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        let (h1, h2) = self.hidden_widths();
        if h1 == 0 || h2 == 0 {
            return Err(Error::Config("regressor hidden widths must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.layer_dropout) || !(0.0..1.0).contains(&self.head_dropout) {
            return Err(Error::Config("dropout probabilities must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

struct HeadLayout {
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
    w3: ParamId,
    b3: ParamId,
}

impl HeadLayout {
    fn param_ids(&self) -> Vec<ParamId> {
        vec![self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub epoch_mse: Vec<f64>,
    pub batch_orders: Vec<Vec<usize>>,
}

/// The regression model: shared encoder + pooling + feed-forward head.
pub struct EstimatorModel {
    pub cfg: EstimatorConfig,
    pub params: ParamSet,
    pub adam: AdamState,
    embedder: SegmentEmbedder,
    head: HeadLayout,
}

fn normal_init(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * sigma
        })
        .collect()
}

impl EstimatorModel {
    pub fn new(cfg: EstimatorConfig) -> Result<EstimatorModel> {
        cfg.validate()?;
        let mut set = ParamSet::new();
        let mut init_rng = stream(cfg.seed, Stream::Init);
        let embedder = SegmentEmbedder::init(
            &mut set,
            cfg.encoder.clone(),
            cfg.layer_dropout,
            cfg.seed,
            &mut init_rng,
        );
        let input = cfg.feature_width();
        let (h1, h2) = cfg.hidden_widths();
        let head = HeadLayout {
            w1: set.add("head.w1", input, h1, normal_init(&mut init_rng, input * h1, 1.0 / (input as f64).sqrt())),
            b1: set.add("head.b1", 1, h1, vec![0.0; h1]),
            w2: set.add("head.w2", h1, h2, normal_init(&mut init_rng, h1 * h2, 1.0 / (h1 as f64).sqrt())),
            b2: set.add("head.b2", 1, h2, vec![0.0; h2]),
            w3: set.add("head.w3", h2, 1, normal_init(&mut init_rng, h2, 1.0 / (h2 as f64).sqrt())),
            b3: set.add("head.b3", 1, 1, vec![0.0]),
        };
        let adam = AdamState::new(&set);
        Ok(EstimatorModel {
            cfg,
            params: set,
            adam,
            embedder,
            head,
        })
    }

    /// The two optimizer groups: the encoder group (transformer weights plus
    /// the pooling scalars) and the regressor head.
    pub fn param_groups(&self, freeze_encoder: bool) -> Vec<ParamGroup> {
        let groups = vec![
            ParamGroup::new(
                "encoder",
                self.cfg.lr_encoder,
                freeze_encoder,
                self.embedder.param_ids(),
            ),
            ParamGroup::new("head", self.cfg.lr_head, false, self.head.param_ids()),
        ];
        debug_assert!(check_partition(&self.params, &groups).is_ok());
        groups
    }

    /// Ids of the encoder-group parameters (used by freeze tests).
    pub fn encoder_param_ids(&self) -> Vec<ParamId> {
        self.embedder.param_ids()
    }

    /// Builds the scalar prediction for one tuple on `tape`.
    pub fn forward_graph(
        &self,
        tape: &Tape,
        binding: &Binding,
        tuple: &EvalTuple,
        mode: Mode,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Tensor> {
        let s = self.embedder.embed(tape, binding, &tuple.source, Segment::Source, mode, rng.as_deref_mut())?;
        let h = self.embedder.embed(tape, binding, &tuple.hypothesis, Segment::Hypothesis, mode, rng.as_deref_mut())?;
        let r = self.embedder.embed(tape, binding, &tuple.reference, Segment::Reference, mode, rng.as_deref_mut())?;
        let x = combine_features(tape, &h, &s, &r, self.cfg.include_source_embedding)?;

        let mut maybe_dropout = |tape: &Tape, t: &Tensor| -> Result<Tensor> {
            match (mode, rng.as_deref_mut()) {
                (Mode::Train, Some(r)) if self.cfg.head_dropout > 0.0 => {
                    tape.dropout(t, self.cfg.head_dropout, r)
                }
                (Mode::Train, None) if self.cfg.head_dropout > 0.0 => {
                    Err(Error::contract("train-mode forward needs a dropout rng"))
                }
                _ => Ok(t.clone()),
            }
        };

        let a1 = tape.tanh(&tape.add(
            &tape.matmul(&x, binding.leaf(self.head.w1))?,
            binding.leaf(self.head.b1),
        )?)?;
        let a1 = maybe_dropout(tape, &a1)?;
        let a2 = tape.tanh(&tape.add(
            &tape.matmul(&a1, binding.leaf(self.head.w2))?,
            binding.leaf(self.head.b2),
        )?)?;
        let a2 = maybe_dropout(tape, &a2)?;
        tape.add(
            &tape.matmul(&a2, binding.leaf(self.head.w3))?,
            binding.leaf(self.head.b3),
        )
    }

    /// Eval-mode prediction for one tuple.
    pub fn predict_one(&self, source: &str, hypothesis: &str, reference: &str) -> Result<f64> {
        let tape = Tape::disabled();
        let binding = self.params.bind(false);
        let tuple = EvalTuple {
            source: source.into(),
            hypothesis: hypothesis.into(),
            reference: reference.into(),
            score: 0.0,
        };
        let out = self.forward_graph(&tape, &binding, &tuple, Mode::Eval, None)?;
        Ok(out.item())
    }

    /// Order-preserving eval-mode predictions, data-parallel across tuples.
    pub fn predict(&self, tuples: &[EvalTuple]) -> Result<Vec<f64>> {
        let scores = crate::parallel::map(tuples, |t| {
            self.predict_one(&t.source, &t.hypothesis, &t.reference)
        });
        scores.into_iter().collect()
    }

    /// Minimizes MSE over `data` with the configured schedule: the encoder
    /// group stays frozen for `frozen_epochs` epochs, then unfreezes at the
    /// encoder learning rate.
    pub fn train(&mut self, data: &[EvalTuple]) -> Result<TrainLog> {
        if data.is_empty() {
            return Err(Error::contract("training requires a nonempty dataset"));
        }
        for t in data {
            t.validate().map_err(|e| Error::Invalid(format!("bad training tuple: {e}")))?;
        }
        let mut shuffle_rng = stream(self.cfg.seed, Stream::Shuffle);
        let mut dropout_rng = stream(self.cfg.seed, Stream::Dropout);
        let mut log = TrainLog::default();

        for epoch in 0..self.cfg.epochs {
            let frozen = epoch < self.cfg.frozen_epochs;
            let groups = self.param_groups(frozen);
            let mut order: Vec<usize> = (0..data.len()).collect();
            order.shuffle(&mut shuffle_rng);
            log.batch_orders.push(order.clone());

            let mut sq_err_sum = 0.0;
            for batch in order.chunks(self.cfg.batch_size) {
                let tape = Tape::new();
                let binding = self.params.bind(true);
                let mut total: Option<Tensor> = None;
                for &idx in batch {
                    let tuple = &data[idx];
                    let pred = self.forward_graph(
                        &tape,
                        &binding,
                        tuple,
                        Mode::Train,
                        Some(&mut dropout_rng),
                    )?;
                    let target = Tensor::scalar(tuple.score);
                    let diff = tape.sub(&pred, &target)?;
                    let sq = tape.mul(&diff, &diff)?;
                    total = Some(match total {
                        Some(t) => tape.add(&t, &sq)?,
                        None => sq,
                    });
                }
                let total = total.expect("nonempty batch");
                let loss = tape.scale_const(&total, 1.0 / batch.len() as f64)?;
                tape.backward(&loss)?;
                adam_step(&mut self.params, &binding, &groups, &mut self.adam);
                sq_err_sum += total.item();
            }
            let epoch_mse = sq_err_sum / data.len() as f64;
            log::info!("estimator epoch {epoch}: train mse {epoch_mse:.6}");
            log.epoch_mse.push(epoch_mse);
        }
        Ok(log)
    }
}

/// Combined feature vector `[h; r; h⊙s; h⊙r; |h−s|; |h−r|]`; with
/// `include_source` the raw source embedding joins as `[h; s; r; …]`.
pub fn combine_features(
    tape: &Tape,
    h: &SentenceEmbedding,
    s: &SentenceEmbedding,
    r: &SentenceEmbedding,
    include_source: bool,
) -> Result<Tensor> {
    let (hv, sv, rv) = (&h.vector, &s.vector, &r.vector);
    if hv.shape() != sv.shape() || hv.shape() != rv.shape() {
        return Err(Error::dim("sentence embeddings must share one width"));
    }
    let hs = tape.mul(hv, sv)?;
    let hr = tape.mul(hv, rv)?;
    let abs_hs = tape.abs(&tape.sub(hv, sv)?)?;
    let abs_hr = tape.abs(&tape.sub(hv, rv)?)?;
    if include_source {
        tape.concat_cols(&[hv, sv, rv, &hs, &hr, &abs_hs, &abs_hr])
    } else {
        tape.concat_cols(&[hv, rv, &hs, &hr, &abs_hs, &abs_hr])
    }
}
