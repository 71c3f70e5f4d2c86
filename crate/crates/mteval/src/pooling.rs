//! Layer-wise attention pooling and sentence embeddings.
//!
//! A trainable softmax mixture over encoder layers collapses the layer stack
//! into one embedding per token, scaled by a trainable coefficient; average
//! pooling over tokens then yields the sentence embedding. During training
//! each layer is independently dropped with probability `p` by masking its
//! mixture weight; a draw that would drop every layer is rejected and
//! redrawn.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{ParamId, ParamSet, Tape, Tensor};
use crate::encoder::{LayerStack, Mode};
use crate::error::{Error, Result};

/// Which segment a sentence embedding came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Source,
    Hypothesis,
    Reference,
}

/// A pooled 1×d sentence embedding tagged with its segment.
pub struct SentenceEmbedding {
    pub vector: Tensor,
    pub segment: Segment,
}

/// Parameter ids of the pooling layer: mixture logits (one per pooled layer)
/// and the scalar output coefficient.
pub struct PoolingLayout {
    pub alpha: ParamId,
    pub mu: ParamId,
}

impl PoolingLayout {
    /// Registers pooling parameters: alpha starts at zero, mu at one.
    pub fn init(set: &mut ParamSet, pooled_layers: usize) -> PoolingLayout {
        PoolingLayout {
            alpha: set.add("pooling.alpha", 1, pooled_layers, vec![0.0; pooled_layers]),
            mu: set.add("pooling.mu", 1, 1, vec![1.0]),
        }
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        vec![self.alpha, self.mu]
    }
}

/// Draws a layer-dropout keep-mask; the all-dropped draw is redrawn.
fn draw_keep_mask(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    loop {
        let mask: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() >= p).collect();
        if mask.iter().any(|&k| k) {
            return mask;
        }
    }
}

/// Collapses a layer stack into one n×d matrix: per token j the output is
/// `mu * Σ_l softmax(alpha)_l · e_j^(l)`.
pub fn pool_layers(
    tape: &Tape,
    stack: &LayerStack,
    alpha: &Tensor,
    mu: &Tensor,
    dropout_p: f64,
    mode: Mode,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Tensor> {
    let depth = stack.depth();
    if depth == 0 {
        return Err(Error::dim("pooling over an empty layer stack"));
    }
    if alpha.shape() != (1, depth) {
        let (r, c) = alpha.shape();
        return Err(Error::dim(format!(
            "alpha is {r}x{c} but the stack has {depth} layers"
        )));
    }
    let mask = match (mode, rng) {
        (Mode::Train, Some(r)) if dropout_p > 0.0 => Some(draw_keep_mask(depth, dropout_p, r)),
        (Mode::Train, None) if dropout_p > 0.0 => {
            return Err(Error::contract("train-mode pooling needs a dropout rng"))
        }
        _ => None,
    };
    let weights = tape.softmax_masked(alpha, mask.as_deref())?;
    let mut acc: Option<Tensor> = None;
    for (l, layer) in stack.layers.iter().enumerate() {
        if let Some(m) = &mask {
            if !m[l] {
                continue;
            }
        }
        let w = tape.slice_cols(&weights, l, 1)?;
        let term = tape.scale_by(layer, &w)?;
        acc = Some(match acc {
            Some(a) => tape.add(&a, &term)?,
            None => term,
        });
    }
    let mixed = acc.expect("at least one unmasked layer");
    tape.scale_by(&mixed, mu)
}

/// Column-wise mean over all token rows (sentinels included): n×d → 1×d.
pub fn average_pool(tape: &Tape, tokens: &Tensor) -> Result<Tensor> {
    tape.mean_rows(tokens)
}
