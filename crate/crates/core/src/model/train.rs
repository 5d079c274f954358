use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{backward, forward, Grads};
use super::params::Params;
use super::Model;
use crate::apps::pearson;
use crate::math::{powf, sqrt};
use crate::metrics::SCORE_DIM;
use crate::preprocess::EncodedInput;
use crate::{Error, Result};

/// Index of Smatch F1 in the flat layout.
const SMATCH_F1: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: EncodedInput,
    pub target: [f64; SCORE_DIM],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { lr: 0.001, epochs: 20, batch_size: 16, seed: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Epoch 0 describes the untrained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub dev_pearson: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
}

/// Adam with bias correction, over the flattened parameter vector.
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(params: &Params, cfg: &TrainConfig) -> Adam {
        let n = params.len();
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0, lr: cfg.lr, beta1: cfg.beta1, beta2: cfg.beta2, eps: cfg.eps }
    }

    pub fn step(&mut self, params: &mut Params, grads: &Grads) {
        self.t += 1;
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let c1 = 1.0 - powf(b1, self.t as f64);
        let c2 = 1.0 - powf(b2, self.t as f64);
        let mut g = Vec::with_capacity(self.m.len());
        grads.for_each(|_, xs| g.extend_from_slice(xs));
        let (m, v) = (&mut self.m, &mut self.v);
        let mut off = 0;
        params.for_each_mut(|_, xs| {
            for (j, p) in xs.iter_mut().enumerate() {
                let k = off + j;
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                *p -= lr * (m[k] / c1) / (sqrt(v[k] / c2) + eps);
            }
            off += xs.len();
        });
        params.zero_pad_rows();
        params.quantize();
    }
}

impl Model {
    /// Mean loss and summed gradient of the configured objective over
    /// `batch`.
    pub fn batch_gradient(&self, batch: &[&Example]) -> Result<(f64, Grads)> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let kind = self.config.loss_kind();
        let mut grads = self.params.zeros_like();
        let mut preds = Vec::with_capacity(batch.len());
        let mut targets = Vec::with_capacity(batch.len());
        for ex in batch {
            let fw = forward(self, &ex.input)?;
            let d_out = kind.output_grad(&fw.out, &ex.target, batch.len());
            backward(self, &fw, &d_out, &mut grads);
            preds.push(fw.out);
            targets.push(ex.target);
        }
        let loss = kind.batch_loss(&preds, &targets)?;
        if let Some(block) = grads.first_non_finite() {
            return Err(Error::NonFinite { block });
        }
        Ok((loss, grads))
    }

    /// Objective value over `batch`, no gradients.
    pub fn batch_loss(&self, batch: &[&Example]) -> Result<f64> {
        let preds = batch.iter().map(|ex| Ok(forward(self, &ex.input)?.out)).collect::<Result<Vec<_>>>()?;
        let targets: Vec<_> = batch.iter().map(|ex| ex.target).collect();
        self.config.loss_kind().batch_loss(&preds, &targets)
    }

    /// Dev loss and Pearson correlation of predicted and gold Smatch F1.
    pub fn dev_metrics(&self, dev: &[Example]) -> Result<(f64, Option<f64>)> {
        let preds = dev.iter().map(|ex| Ok(forward(self, &ex.input)?.out)).collect::<Result<Vec<_>>>()?;
        let targets: Vec<_> = dev.iter().map(|ex| ex.target).collect();
        let loss = self.config.loss_kind().batch_loss(&preds, &targets)?;
        let x: Vec<f64> = preds.iter().map(|p| p[SMATCH_F1]).collect();
        let y: Vec<f64> = targets.iter().map(|t| t[SMATCH_F1]).collect();
        Ok((loss, pearson(&x, &y).ok()))
    }

    pub fn train(self, train: &[Example], dev: &[Example], cfg: &TrainConfig) -> Result<(Model, History)> {
        self.train_with(train, dev, cfg, |_| {})
    }

    /// Adam over shuffled mini-batches; returns the parameters of the epoch
    /// with the highest dev correlation (earliest on ties).
    pub fn train_with(
        mut self,
        train: &[Example],
        dev: &[Example],
        cfg: &TrainConfig,
        mut on_epoch: impl FnMut(&EpochRecord),
    ) -> Result<(Model, History)> {
        if train.is_empty() {
            return Err(Error::Empty("training set"));
        }
        if dev.is_empty() {
            return Err(Error::Empty("dev set"));
        }
        if cfg.batch_size == 0 || cfg.epochs == 0 || cfg.lr.is_nan() || cfg.lr <= 0.0 {
            return Err(Error::InvalidArgument("batch size, epochs and learning rate must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut adam = Adam::new(&self.params, cfg);
        let all: Vec<&Example> = train.iter().collect();
        let (dev_loss, dev_pearson) = self.dev_metrics(dev)?;
        let first = EpochRecord { epoch: 0, train_loss: self.batch_loss(&all)?, dev_loss, dev_pearson };
        on_epoch(&first);
        let mut records = vec![first];
        let mut best: Option<(f64, usize, Params)> = None;
        let mut order: Vec<usize> = (0..train.len()).collect();
        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut rng);
            let mut sum = 0.0;
            let mut n_batches = 0;
            for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
                let batch: Vec<&Example> = chunk.iter().map(|&i| &train[i]).collect();
                let (loss, grads) = match self.batch_gradient(&batch) {
                    Err(Error::NonFinite { .. }) => return Err(Error::NonFiniteLoss { epoch, batch: b }),
                    r => r?,
                };
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, batch: b });
                }
                adam.step(&mut self.params, &grads);
                sum += loss;
                n_batches += 1;
            }
            let (dev_loss, dev_pearson) = self.dev_metrics(dev)?;
            let rec = EpochRecord { epoch, train_loss: sum / n_batches as f64, dev_loss, dev_pearson };
            on_epoch(&rec);
            let score = dev_pearson.unwrap_or(f64::NEG_INFINITY);
            if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
                best = Some((score, epoch, self.params.clone()));
            }
            records.push(rec);
        }
        let (_, best_epoch, params) = best.expect("at least one epoch");
        self.params = params;
        Ok((self, History { records, best_epoch }))
    }
}

/// Largest relative difference between analytic gradients and central
/// finite differences over a sample of parameters. The sample is spread
/// evenly over parameter blocks; embedding rows are sampled only among rows
/// the batch actually uses. Relative error is `|a − n| / max(|a|, |n|, 1e-6)`.
pub fn grad_check(model: &Model, batch: &[Example], eps: f64, samples: usize, seed: u64) -> Result<f64> {
    let refs: Vec<&Example> = batch.iter().collect();
    let (_, grads) = model.batch_gradient(&refs)?;
    let candidates = candidate_params(model, batch);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_block = samples.div_ceil(candidates.len().max(1));
    let mut picks: Vec<(usize, usize)> = Vec::new();
    for (block, idxs) in candidates.iter().enumerate() {
        let chosen: Vec<usize> = idxs.choose_multiple(&mut rng, per_block.min(idxs.len())).copied().collect();
        picks.extend(chosen.into_iter().map(|i| (block, i)));
    }
    while picks.len() < samples {
        let block = rng.gen_range(0..candidates.len());
        if !candidates[block].is_empty() {
            let i = candidates[block][rng.gen_range(0..candidates[block].len())];
            picks.push((block, i));
        }
    }
    let mut analytic_blocks = Vec::new();
    grads.for_each(|_, g| analytic_blocks.push(g.to_vec()));
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (block, i) in picks {
        let orig = get_param(&probe.params, block, i);
        set_param(&mut probe.params, block, i, orig + eps);
        let up = probe.batch_loss(&refs)?;
        set_param(&mut probe.params, block, i, orig - eps);
        let down = probe.batch_loss(&refs)?;
        set_param(&mut probe.params, block, i, orig);
        let numeric = (up - down) / (2.0 * eps);
        let analytic = analytic_blocks[block][i];
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn candidate_params(model: &Model, batch: &[Example]) -> Vec<Vec<usize>> {
    let mut tok = BTreeSet::new();
    let mut ptr = BTreeSet::new();
    let mut sense = BTreeSet::new();
    for ex in batch {
        let (dt, dp, dl) = model.dep_stream(&ex.input);
        let n = ex.input.amr_len;
        tok.extend(ex.input.amr_tokens[..n].iter().chain(&dt[..dl]).copied());
        ptr.extend(ex.input.amr_pointers[..n].iter().chain(&dp[..dl]).copied());
        sense.extend(ex.input.amr_senses[..n].iter().copied());
    }
    if !model.config.use_pointers {
        ptr.clear();
    }
    let e = model.config.embed_dim;
    let rows = |set: &BTreeSet<u32>| -> Vec<usize> {
        set.iter().filter(|&&r| r != 0).flat_map(|&r| (r as usize * e)..(r as usize + 1) * e).collect()
    };
    let mut out = Vec::new();
    model.params.for_each(|name, xs| {
        out.push(match name {
            "token_emb" => rows(&tok),
            "pointer_emb" => rows(&ptr),
            "sense_emb" => rows(&sense),
            _ => (0..xs.len()).collect(),
        })
    });
    out
}

fn get_param(p: &Params, block: usize, i: usize) -> f64 {
    let mut k = 0;
    let mut v = 0.0;
    p.for_each(|_, xs| {
        if k == block {
            v = xs[i];
        }
        k += 1;
    });
    v
}

fn set_param(p: &mut Params, block: usize, i: usize, value: f64) {
    let mut k = 0;
    p.for_each_mut(|_, xs| {
        if k == block {
            xs[i] = value;
        }
        k += 1;
    });
}
