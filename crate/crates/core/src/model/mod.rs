//! Hierarchical multi-output regressor over linearized AMR and dependency
//! streams: two stacked BiLSTM encoders, an (⊙, −, +) combination, a
//! subtask head and a Smatch head fed by the subtask outputs.
//!
//! All arithmetic is `f64`; parameters are rounded to `f32` after
//! initialization and after every optimizer step so a saved model predicts
//! exactly what the in-memory one does.

mod loss;
mod network;
mod params;
mod train;

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metrics::{ScoreVector, MAIN_DIM, SCORE_DIM};
use crate::preprocess::{EncodedInput, Vocab, DEFAULT_MAX_LEN};
use crate::{Error, Result};

pub use loss::{loss_flat, loss_hier, LossKind};
pub use network::Grads;
pub use params::{glorot_bound, BiLayer, Dense, LstmDir, Mat, Params};
pub use train::{grad_check, Adam, EpochRecord, Example, History, TrainConfig};

/// Embedding entries are drawn from `[-EMBED_INIT, EMBED_INIT]`.
pub const EMBED_INIT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub lstm_layers: usize,
    pub use_dep: bool,
    pub use_pointers: bool,
    pub hierarchical: bool,
    pub multitask: bool,
    pub d: usize,
    pub k: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub max_len: usize,
    pub seed: u64,
    pub token_vocab: usize,
    pub pointer_vocab: usize,
    pub sense_vocab: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: 128,
            hidden_dim: 128,
            lstm_layers: 2,
            use_dep: true,
            use_pointers: true,
            hierarchical: true,
            multitask: true,
            d: SCORE_DIM,
            k: MAIN_DIM,
            lambda1: 0.2,
            lambda2: 1.0,
            max_len: DEFAULT_MAX_LEN,
            seed: 0,
            token_vocab: 4,
            pointer_vocab: 3 + DEFAULT_MAX_LEN,
            sense_vocab: 3,
        }
    }
}

impl ModelConfig {
    /// Default hyperparameters with table sizes taken from `vocab`.
    pub fn for_vocab(vocab: &Vocab) -> Self {
        ModelConfig::default().with_vocab(vocab)
    }

    pub fn with_vocab(mut self, vocab: &Vocab) -> Self {
        self.token_vocab = vocab.token_count();
        self.pointer_vocab = vocab.pointer_count();
        self.sense_vocab = vocab.sense_count();
        self.max_len = vocab.max_len;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("model config: {m}")));
        if self.d != SCORE_DIM || self.k != MAIN_DIM {
            return bad("d and k must be 36 and 3");
        }
        if self.k >= self.d {
            return bad("k must be smaller than d");
        }
        if !(self.lambda1 > 0.0 && self.lambda2 > 0.0 && self.lambda1.is_finite() && self.lambda2.is_finite()) {
            return bad("loss weights must be positive");
        }
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.lstm_layers == 0 || self.max_len == 0 {
            return bad("dimensions must be positive");
        }
        if self.token_vocab < 4 || self.pointer_vocab < 3 || self.sense_vocab < 3 {
            return bad("vocabulary tables are smaller than the reserved ids");
        }
        Ok(())
    }

    /// Whether the network has separate subtask and Smatch heads. The
    /// single-task ablation always uses one flat head.
    pub fn split_heads(&self) -> bool {
        self.hierarchical && self.multitask
    }

    pub fn loss_kind(&self) -> LossKind {
        if !self.multitask {
            LossKind::SmatchOnly
        } else if self.hierarchical {
            LossKind::Hierarchical { lambda1: self.lambda1, lambda2: self.lambda2 }
        } else {
            LossKind::Flat
        }
    }

    pub fn combined_dim(&self) -> usize {
        6 * self.hidden_dim
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: Params,
}

impl Model {
    /// Fresh model; fully determined by `config.seed`.
    pub fn init(config: ModelConfig) -> Result<Model> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (e, h) = (config.embed_dim, config.hidden_dim);
        let token_emb = Mat::uniform(config.token_vocab, e, EMBED_INIT, &mut rng);
        let pointer_emb = Mat::uniform(config.pointer_vocab, e, EMBED_INIT, &mut rng);
        let sense_emb = Mat::uniform(config.sense_vocab, e, EMBED_INIT, &mut rng);
        let encoder = |rng: &mut ChaCha8Rng| -> Vec<BiLayer> {
            (0..config.lstm_layers)
                .map(|l| {
                    let n_in = if l == 0 { e } else { 2 * h };
                    BiLayer { fwd: LstmDir::init(n_in, h, rng), bwd: LstmDir::init(n_in, h, rng) }
                })
                .collect()
        };
        let amr_enc = encoder(&mut rng);
        let dep_enc = encoder(&mut rng);
        let c = config.combined_dim();
        let (sub_head, main_head) = if config.split_heads() {
            let sub = Dense::glorot(c, config.d - config.k, &mut rng);
            (Some(sub), Dense::glorot(c + config.d - config.k, config.k, &mut rng))
        } else {
            (None, Dense::glorot(c, config.d, &mut rng))
        };
        let mut params = Params { token_emb, pointer_emb, sense_emb, amr_enc, dep_enc, sub_head, main_head };
        params.zero_pad_rows();
        params.quantize();
        Ok(Model { config, params })
    }

    /// Rebuild from stored parameters, checking every shape against the
    /// config.
    pub fn from_parts(config: ModelConfig, params: Params) -> Result<Model> {
        let template = Model::init(ModelConfig { seed: 0, ..config.clone() })?;
        if template.params.shapes() != params.shapes() {
            return Err(Error::Shape("parameter shapes do not match the model config".into()));
        }
        if let Some(block) = params.first_non_finite() {
            return Err(Error::NonFinite { block });
        }
        Ok(Model { config, params })
    }

    /// Per-position embedding sums over the full (padded) sequences.
    pub fn embed_and_sum(&self, input: &EncodedInput) -> Result<(Mat, Mat)> {
        let (dt, dp, _) = self.dep_stream(input);
        let amr = network::embed(self, &input.amr_tokens, &input.amr_pointers, Some(&input.amr_senses), input.amr_tokens.len())?;
        let dep = network::embed(self, dt, dp, None, dt.len())?;
        Ok((amr, dep))
    }

    /// Combined `(a ⊙ d, a − d, a + d)` vector from the first `amr_len`
    /// and `dep_len` rows of the embedded streams.
    pub fn encode_joint(&self, amr: &Mat, dep: &Mat, amr_len: usize, dep_len: usize) -> Result<Vec<f64>> {
        let (va, _) = network::encode(&self.params.amr_enc, amr, amr_len)?;
        let (vd, _) = network::encode(&self.params.dep_enc, dep, dep_len)?;
        Ok(network::combine(&va, &vd))
    }

    /// All 36 scores in the flat canonical layout.
    pub fn predict_array(&self, input: &EncodedInput) -> Result<[f64; SCORE_DIM]> {
        Ok(network::forward(self, input)?.out)
    }

    pub fn predict(&self, input: &EncodedInput) -> Result<ScoreVector> {
        ScoreVector::from_slice(&self.predict_array(input)?)
    }

    /// The stream fed to the second encoder: dependency order, or sentence
    /// order when dependencies are disabled.
    pub(crate) fn dep_stream<'a>(&self, input: &'a EncodedInput) -> (&'a [u32], &'a [u32], usize) {
        if self.config.use_dep {
            (&input.dep_tokens, &input.dep_pointers, input.dep_len)
        } else {
            (&input.sent_tokens, &input.sent_pointers, input.sent_len)
        }
    }
}
