//! Multi-layer sentence encoders.
//!
//! Both encoders produce one embedding per token per layer: layer 0 is the
//! embedding-table output (plus sinusoidal position for the transformer),
//! layers 1..k are the outputs of the transformer blocks. The hashed encoder
//! is a parameter-free deterministic baseline whose upper layers copy layer 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Binding, ParamId, ParamSet, Tape, Tensor};
use crate::error::{Error, Result};
use crate::rng;
use crate::text::TokenSeq;

/// Forward-pass mode; training enables dropout draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Encoder hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Hash-bucket vocabulary size (sentinel ids included).
    pub vocab_size: usize,
    /// Embedding width d.
    pub d: usize,
    /// Number of transformer blocks k.
    pub layers: usize,
    pub heads: usize,
    /// Feed-forward inner width.
    pub ff: usize,
    /// Dropout probability inside transformer blocks (train mode only).
    pub dropout: f64,
    pub kind: EncoderKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    Transformer,
    Hashed,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            vocab_size: 1024,
            d: 32,
            layers: 4,
            heads: 4,
            ff: 64,
            dropout: 0.1,
            kind: EncoderKind::Transformer,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 {
            return Err(Error::Config("encoder needs at least one layer".into()));
        }
        if self.heads == 0 || self.d % self.heads != 0 {
            return Err(Error::Config(format!(
                "width {} not divisible by {} heads",
                self.d, self.heads
            )));
        }
        if self.vocab_size <= crate::text::RESERVED {
            return Err(Error::Config("vocabulary too small".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Per-layer token embeddings: `layers[0]` is the embedding output,
/// `layers[l]` (l ≥ 1) the output of block l. All share shape n×d.
pub struct LayerStack {
    pub layers: Vec<Tensor>,
}

impl LayerStack {
    /// Number of pooled layers, k+1.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }
}

struct BlockLayout {
    ln1_gain: ParamId,
    ln1_bias: ParamId,
    wq: ParamId,
    wk: ParamId,
    wv: ParamId,
    wo: ParamId,
    ln2_gain: ParamId,
    ln2_bias: ParamId,
    ff1: ParamId,
    ff2: ParamId,
}

/// Parameter ids of the transformer encoder inside a model's [`ParamSet`].
pub struct EncoderLayout {
    embed: Option<ParamId>,
    blocks: Vec<BlockLayout>,
}

const LN_EPS: f64 = 1e-5;

fn normal(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * sigma
        })
        .collect()
}

impl EncoderLayout {
    /// Registers all encoder parameters, drawing initial values from `rng`.
    /// The hashed encoder registers none.
    pub fn init(set: &mut ParamSet, cfg: &EncoderConfig, rng: &mut ChaCha8Rng) -> EncoderLayout {
        if cfg.kind == EncoderKind::Hashed {
            return EncoderLayout {
                embed: None,
                blocks: Vec::new(),
            };
        }
        let d = cfg.d;
        let embed = set.add(
            "encoder.embed",
            cfg.vocab_size,
            d,
            normal(rng, cfg.vocab_size * d, 0.1),
        );
        let proj_sigma = 1.0 / (d as f64).sqrt();
        let ff_sigma = 1.0 / (cfg.ff as f64).sqrt();
        let mut blocks = Vec::with_capacity(cfg.layers);
        for b in 0..cfg.layers {
            let p = |suffix: &str| format!("encoder.block{b}.{suffix}");
            blocks.push(BlockLayout {
                ln1_gain: set.add(p("ln1.gain"), 1, d, vec![1.0; d]),
                ln1_bias: set.add(p("ln1.bias"), 1, d, vec![0.0; d]),
                wq: set.add(p("wq"), d, d, normal(rng, d * d, proj_sigma)),
                wk: set.add(p("wk"), d, d, normal(rng, d * d, proj_sigma)),
                wv: set.add(p("wv"), d, d, normal(rng, d * d, proj_sigma)),
                wo: set.add(p("wo"), d, d, normal(rng, d * d, proj_sigma)),
                ln2_gain: set.add(p("ln2.gain"), 1, d, vec![1.0; d]),
                ln2_bias: set.add(p("ln2.bias"), 1, d, vec![0.0; d]),
                ff1: set.add(p("ff1"), d, cfg.ff, normal(rng, d * cfg.ff, proj_sigma)),
                ff2: set.add(p("ff2"), cfg.ff, d, normal(rng, cfg.ff * d, ff_sigma)),
            });
        }
        EncoderLayout {
            embed: Some(embed),
            blocks,
        }
    }

    /// Ids of every encoder parameter, in declaration order.
    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = Vec::new();
        if let Some(e) = self.embed {
            ids.push(e);
        }
        for b in &self.blocks {
            ids.extend([
                b.ln1_gain, b.ln1_bias, b.wq, b.wk, b.wv, b.wo, b.ln2_gain, b.ln2_bias, b.ff1,
                b.ff2,
            ]);
        }
        ids
    }
}

/// Sinusoidal positional encodings for `n` positions of width `d`.
fn positional(n: usize, d: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * d];
    for pos in 0..n {
        for j in 0..d {
            let exponent = (2 * (j / 2)) as f64 / d as f64;
            let angle = pos as f64 / 10_000f64.powf(exponent);
            out[pos * d + j] = if j % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    out
}

/// Encodes a token sequence with the trainable transformer, producing k+1
/// layers on `tape`. In train mode each block applies dropout from `rng`;
/// eval mode is a pure function of (parameters, input).
pub fn encode(
    layout: &EncoderLayout,
    cfg: &EncoderConfig,
    binding: &Binding,
    tape: &Tape,
    seq: &TokenSeq,
    mode: Mode,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<LayerStack> {
    if cfg.kind == EncoderKind::Hashed {
        return Err(Error::contract(
            "encode() needs a transformer config; call encode_hashed for the hashed baseline",
        ));
    }
    let embed_id = layout.embed.expect("transformer layout");
    let n = seq.ids.len();
    let d = cfg.d;
    let dh = d / cfg.heads;
    let scale = 1.0 / (dh as f64).sqrt();

    let mut dropout_rng = rng;
    let mut maybe_dropout = |tape: &Tape, t: &Tensor| -> Result<Tensor> {
        match (mode, dropout_rng.as_deref_mut()) {
            (Mode::Train, Some(r)) if cfg.dropout > 0.0 => tape.dropout(t, cfg.dropout, r),
            (Mode::Train, None) if cfg.dropout > 0.0 => Err(Error::contract(
                "train-mode encode needs a dropout rng",
            )),
            _ => Ok(t.clone()),
        }
    };

    let emb = tape.embed(binding.leaf(embed_id), &seq.ids)?;
    let pos = Tensor::new(n, d, positional(n, d), false)?;
    let mut x = tape.add(&emb, &pos)?;
    let mut layers = vec![x.clone()];

    for block in &layout.blocks {
        // Pre-norm self-attention.
        let ln1 = tape.layer_norm(
            &x,
            binding.leaf(block.ln1_gain),
            binding.leaf(block.ln1_bias),
            LN_EPS,
        )?;
        let q = tape.matmul(&ln1, binding.leaf(block.wq))?;
        let k = tape.matmul(&ln1, binding.leaf(block.wk))?;
        let v = tape.matmul(&ln1, binding.leaf(block.wv))?;
        let mut heads = Vec::with_capacity(cfg.heads);
        for h in 0..cfg.heads {
            let qh = tape.slice_cols(&q, h * dh, dh)?;
            let kh = tape.slice_cols(&k, h * dh, dh)?;
            let vh = tape.slice_cols(&v, h * dh, dh)?;
            let kt = tape.transpose(&kh)?;
            let scores = tape.scale_const(&tape.matmul(&qh, &kt)?, scale)?;
            let attn = tape.softmax_rows(&scores)?;
            heads.push(tape.matmul(&attn, &vh)?);
        }
        let head_refs: Vec<&Tensor> = heads.iter().collect();
        let merged = tape.concat_cols(&head_refs)?;
        let projected = tape.matmul(&merged, binding.leaf(block.wo))?;
        let projected = maybe_dropout(tape, &projected)?;
        x = tape.add(&x, &projected)?;

        // Pre-norm feed-forward.
        let ln2 = tape.layer_norm(
            &x,
            binding.leaf(block.ln2_gain),
            binding.leaf(block.ln2_bias),
            LN_EPS,
        )?;
        let inner = tape.tanh(&tape.matmul(&ln2, binding.leaf(block.ff1))?)?;
        let ff_out = tape.matmul(&inner, binding.leaf(block.ff2))?;
        let ff_out = maybe_dropout(tape, &ff_out)?;
        x = tape.add(&x, &ff_out)?;
        layers.push(x.clone());
    }
    Ok(LayerStack { layers })
}

/// Deterministic parameter-free encoder: layer 0 holds one seeded random
/// embedding per token id; layers 1..k are exact copies.
pub fn encode_hashed(cfg: &EncoderConfig, seed: u64, seq: &TokenSeq) -> Result<LayerStack> {
    let n = seq.ids.len();
    let d = cfg.d;
    let mut values = vec![0.0; n * d];
    for (i, &id) in seq.ids.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(rng::mix(seed, id as u64));
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            values[i * d + j] = z;
        }
    }
    let base = Tensor::new(n, d, values, false)?;
    let layers = (0..=cfg.layers)
        .map(|l| {
            if l == 0 {
                base.clone()
            } else {
                Tensor::new(n, d, base.values(), false).unwrap()
            }
        })
        .collect();
    Ok(LayerStack { layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn toy_cfg() -> EncoderConfig {
        EncoderConfig {
            vocab_size: 64,
            d: 16,
            layers: 3,
            heads: 4,
            ff: 32,
            dropout: 0.0,
            kind: EncoderKind::Transformer,
        }
    }

    fn build(cfg: &EncoderConfig, seed: u64) -> (ParamSet, EncoderLayout) {
        let mut set = ParamSet::new();
        let mut rng = rng::stream(seed, rng::Stream::Init);
        let layout = EncoderLayout::init(&mut set, cfg, &mut rng);
        (set, layout)
    }

    #[test]
    fn shape_contract() {
        let cfg = toy_cfg();
        let (set, layout) = build(&cfg, 3);
        let seq = tokenize("one two three", cfg.vocab_size).unwrap();
        let tape = Tape::disabled();
        let binding = set.bind(false);
        let stack = encode(&layout, &cfg, &binding, &tape, &seq, Mode::Eval, None).unwrap();
        assert_eq!(stack.depth(), 4);
        for layer in &stack.layers {
            assert_eq!(layer.shape(), (seq.ids.len(), 16));
        }
    }

    #[test]
    fn eval_mode_is_deterministic() {
        let cfg = toy_cfg();
        let (set, layout) = build(&cfg, 3);
        let seq = tokenize("the same sentence twice", cfg.vocab_size).unwrap();
        let run = || {
            let tape = Tape::disabled();
            let binding = set.bind(false);
            let stack = encode(&layout, &cfg, &binding, &tape, &seq, Mode::Eval, None).unwrap();
            stack.layers.iter().map(|l| l.values()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn permuting_tokens_changes_upper_layers() {
        let cfg = toy_cfg();
        let (set, layout) = build(&cfg, 3);
        let a = tokenize("alpha beta gamma delta", cfg.vocab_size).unwrap();
        let b = tokenize("beta alpha gamma delta", cfg.vocab_size).unwrap();
        assert_ne!(a.ids, b.ids);
        let tape = Tape::disabled();
        let binding = set.bind(false);
        let sa = encode(&layout, &cfg, &binding, &tape, &a, Mode::Eval, None).unwrap();
        let sb = encode(&layout, &cfg, &binding, &tape, &b, Mode::Eval, None).unwrap();
        let changed = (1..sa.depth()).any(|l| sa.layers[l].values() != sb.layers[l].values());
        assert!(changed);
    }

    #[test]
    fn layer_zero_is_permutation_equivariant() {
        let cfg = toy_cfg();
        let (set, layout) = build(&cfg, 3);
        // layer-0 row j must equal embedding[token_j] + positional[j] exactly,
        // for both token orders
        let tape = Tape::disabled();
        let binding = set.bind(false);
        let d = cfg.d;
        let table = set.get(0).value.clone();
        for text in ["red blue", "blue red"] {
            let seq = tokenize(text, cfg.vocab_size).unwrap();
            let stack = encode(&layout, &cfg, &binding, &tape, &seq, Mode::Eval, None).unwrap();
            let v0 = stack.layers[0].values();
            let pos = positional(seq.ids.len(), d);
            for (row, &id) in seq.ids.iter().enumerate() {
                for j in 0..d {
                    let want = table[id * d + j] + pos[row * d + j];
                    assert_eq!(v0[row * d + j], want);
                }
            }
        }
    }

    #[test]
    fn different_seeds_differ_at_layer_zero() {
        let cfg = toy_cfg();
        let (set_a, _) = build(&cfg, 3);
        let (set_b, _) = build(&cfg, 4);
        assert_ne!(set_a.get(0).value, set_b.get(0).value);
    }

    #[test]
    fn hashed_layers_copy_layer_zero() {
        let cfg = EncoderConfig {
            kind: EncoderKind::Hashed,
            ..toy_cfg()
        };
        let seq = tokenize("copy me upward", cfg.vocab_size).unwrap();
        let stack = encode_hashed(&cfg, 3, &seq).unwrap();
        assert_eq!(stack.depth(), cfg.layers + 1);
        for l in 1..stack.depth() {
            assert_eq!(stack.layers[l].values(), stack.layers[0].values());
        }
    }

    #[test]
    fn hashed_is_deterministic_per_token_id() {
        let cfg = EncoderConfig {
            kind: EncoderKind::Hashed,
            ..toy_cfg()
        };
        let a = tokenize("word word", cfg.vocab_size).unwrap();
        let stack = encode_hashed(&cfg, 3, &a).unwrap();
        let v = stack.layers[0].values();
        let d = cfg.d;
        // both "word" rows identical
        assert_eq!(v[d..2 * d], v[2 * d..3 * d]);
    }
}
