//! Shared encoder + pooling assembly used by both model architectures.

use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Binding, ParamId, ParamSet, Tape};
use crate::encoder::{encode, encode_hashed, EncoderConfig, EncoderKind, EncoderLayout, Mode};
use crate::error::Result;
use crate::pooling::{average_pool, pool_layers, PoolingLayout, Segment, SentenceEmbedding};
use crate::text::tokenize;

/// Encoder and pooling layouts of one model, plus the knobs both share.
pub struct SegmentEmbedder {
    pub encoder_cfg: EncoderConfig,
    pub layer_dropout: f64,
    pub seed: u64,
    pub encoder: EncoderLayout,
    pub pooling: PoolingLayout,
}

impl SegmentEmbedder {
    pub fn init(
        set: &mut ParamSet,
        encoder_cfg: EncoderConfig,
        layer_dropout: f64,
        seed: u64,
        rng: &mut ChaCha8Rng,
    ) -> SegmentEmbedder {
        let encoder = EncoderLayout::init(set, &encoder_cfg, rng);
        let pooling = PoolingLayout::init(set, encoder_cfg.layers + 1);
        SegmentEmbedder {
            encoder_cfg,
            layer_dropout,
            seed,
            encoder,
            pooling,
        }
    }

    /// Encoder-side parameters: transformer weights plus the pooling scalars.
    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.encoder.param_ids();
        ids.extend(self.pooling.param_ids());
        ids
    }

    /// Embeds one segment into a 1×d sentence embedding.
    pub fn embed(
        &self,
        tape: &Tape,
        binding: &Binding,
        text: &str,
        segment: Segment,
        mode: Mode,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<SentenceEmbedding> {
        let seq = tokenize(text, self.encoder_cfg.vocab_size)?;
        let stack = match self.encoder_cfg.kind {
            EncoderKind::Transformer => encode(
                &self.encoder,
                &self.encoder_cfg,
                binding,
                tape,
                &seq,
                mode,
                rng.as_deref_mut(),
            )?,
            EncoderKind::Hashed => encode_hashed(&self.encoder_cfg, self.seed, &seq)?,
        };
        let pooled = pool_layers(
            tape,
            &stack,
            binding.leaf(self.pooling.alpha),
            binding.leaf(self.pooling.mu),
            self.layer_dropout,
            mode,
            rng.as_deref_mut(),
        )?;
        let vector = average_pool(tape, &pooled)?;
        Ok(SentenceEmbedding { vector, segment })
    }
}

