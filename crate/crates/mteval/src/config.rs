//! Flat run configuration.
//!
//! One TOML file covers every hyperparameter of both model kinds plus the
//! seed; keys the schema does not know are rejected, not ignored. Missing
//! keys take the defaults below.

use serde::{Deserialize, Serialize};

use crate::encoder::{EncoderConfig, EncoderKind};
use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::ranker::RankerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// `transformer` or `hashed`.
    pub encoder: EncoderKind,
    pub vocab_size: usize,
    pub d: usize,
    pub layers: usize,
    pub heads: usize,
    pub ff: usize,
    pub encoder_dropout: f64,
    pub layer_dropout: f64,
    /// Regressor hidden widths; when absent they scale with d as (9d, 4.5d).
    pub hidden1: Option<usize>,
    pub hidden2: Option<usize>,
    pub head_dropout: f64,
    pub epochs: usize,
    pub frozen_epochs: usize,
    pub lr_head: f64,
    pub lr_encoder: f64,
    /// Single learning rate of the ranking model.
    pub lr: f64,
    pub batch_size: usize,
    pub margin: f64,
    pub reference_only: bool,
    pub include_source_embedding: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 3,
            encoder: EncoderKind::Transformer,
            vocab_size: 1024,
            d: 32,
            layers: 4,
            heads: 4,
            ff: 64,
            encoder_dropout: 0.1,
            layer_dropout: 0.1,
            hidden1: None,
            hidden2: None,
            head_dropout: 0.1,
            epochs: 4,
            frozen_epochs: 1,
            lr_head: 3e-5,
            lr_encoder: 1e-5,
            lr: 1e-5,
            batch_size: 16,
            margin: 1.0,
            reference_only: false,
            include_source_embedding: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden1.is_some() != self.hidden2.is_some() {
            return Err(Error::Config(
                "hidden1 and hidden2 must be given together".into(),
            ));
        }
        self.encoder_config().validate()
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig {
            vocab_size: self.vocab_size,
            d: self.d,
            layers: self.layers,
            heads: self.heads,
            ff: self.ff,
            dropout: self.encoder_dropout,
            kind: self.encoder,
        }
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            encoder: self.encoder_config(),
            layer_dropout: self.layer_dropout,
            hidden: self.hidden1.zip(self.hidden2),
            head_dropout: self.head_dropout,
            epochs: self.epochs,
            frozen_epochs: self.frozen_epochs,
            lr_head: self.lr_head,
            lr_encoder: self.lr_encoder,
            batch_size: self.batch_size,
            include_source_embedding: self.include_source_embedding,
            seed: self.seed,
        }
    }

    pub fn ranker_config(&self) -> RankerConfig {
        RankerConfig {
            encoder: self.encoder_config(),
            layer_dropout: self.layer_dropout,
            margin: self.margin,
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            reference_only: self.reference_only,
            seed: self.seed,
        }
    }
}
