use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adapter::FitOptions;
use super::neural::{NeuralConfig, NeuralLm, Params, TensorId};
use super::EOS;
use crate::error::{Error, Result};
use crate::Token;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LrSchedule {
    Constant {
        lr: f64,
    },
    /// Linear interpolation from `start` at step 0 to `end` at the last step.
    Linear {
        start: f64,
        end: f64,
    },
}

impl LrSchedule {
    pub fn at(&self, step: usize, total: usize) -> f64 {
        match *self {
            LrSchedule::Constant { lr } => lr,
            LrSchedule::Linear { start, end } => {
                if total <= 1 {
                    start
                } else {
                    start + (end - start) * step as f64 / (total - 1) as f64
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    Sgd,
    /// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainOptions {
    pub steps: usize,
    pub batch_size: usize,
    pub schedule: LrSchedule,
    pub seed: u64,
    #[serde(default)]
    pub optimizer: Optimizer,
}

/// First and second moment estimates for Adam.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Params,
    v: Params,
    t: i32,
}

impl AdamState {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(config: &NeuralConfig) -> Self {
        Self {
            m: Params::zeros(config),
            v: Params::zeros(config),
            t: 0,
        }
    }

    /// One Adam update of `model` on `batch` restricted to `trainable`.
    pub fn step(
        &mut self,
        model: &NeuralLm,
        batch: &[Vec<Token>],
        lr: f64,
        trainable: &[TensorId],
    ) -> Result<NeuralLm> {
        let (loss, grad) = model.loss_and_grad(batch)?;
        if !loss.is_finite() {
            return Err(Error::Divergence(loss));
        }
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let mut params = model.params().clone();
        for &id in trainable {
            let g = grad.get(id).data();
            let m = self.m.get_mut(id).data_mut();
            let v = self.v.get_mut(id).data_mut();
            let p = params.get_mut(id).data_mut();
            for i in 0..g.len() {
                m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * g[i];
                v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + Self::EPS);
            }
        }
        if !params.is_finite() {
            return Err(Error::Divergence(f64::NAN));
        }
        model.with_params(params)
    }
}

/// Splits a token stream into documents, each ending at (and including)
/// an end-of-sequence token. A trailing unterminated fragment is kept.
pub fn split_documents(stream: &[Token]) -> Vec<Vec<Token>> {
    let mut docs = Vec::new();
    let mut current = Vec::new();
    for &t in stream {
        current.push(t);
        if t == EOS {
            docs.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        docs.push(current);
    }
    docs
}

/// Minibatch gradient descent over documents drawn uniformly from the corpus.
pub fn pretrain(model: &NeuralLm, corpus: &[Token], opts: &PretrainOptions) -> Result<NeuralLm> {
    if opts.steps == 0 {
        return Ok(model.clone());
    }
    let docs = split_documents(corpus);
    if docs.is_empty() {
        return Err(Error::InvalidArgument("pretraining corpus is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut current = model.clone();
    let mut adam = AdamState::new(model.config());
    for step in 0..opts.steps {
        let batch: Vec<Vec<Token>> = (0..opts.batch_size.max(1))
            .map(|_| docs[rng.random_range(0..docs.len())].clone())
            .collect();
        let lr = opts.schedule.at(step, opts.steps);
        current = match opts.optimizer {
            Optimizer::Sgd => current.train_step(&batch, lr)?,
            Optimizer::Adam => adam.step(&current, &batch, lr, &TensorId::ALL)?,
        };
    }
    Ok(current)
}

/// Epochs of in-order minibatch descent on the listed tensors.
pub fn fit(
    model: &NeuralLm,
    data: &[Vec<Token>],
    opts: FitOptions,
    trainable: &[TensorId],
) -> Result<NeuralLm> {
    let mut current = model.clone();
    for _ in 0..opts.epochs {
        for batch in data.chunks(opts.batch_size.max(1)) {
            current = current.train_step_masked(batch, opts.lr, trainable)?;
        }
    }
    Ok(current)
}

/// [`fit`] with a choice of optimizer; Adam state persists across epochs.
pub fn fit_with(
    model: &NeuralLm,
    data: &[Vec<Token>],
    opts: FitOptions,
    trainable: &[TensorId],
    optimizer: Optimizer,
) -> Result<NeuralLm> {
    if optimizer == Optimizer::Sgd {
        return fit(model, data, opts, trainable);
    }
    let mut adam = AdamState::new(model.config());
    let mut current = model.clone();
    for _ in 0..opts.epochs {
        for batch in data.chunks(opts.batch_size.max(1)) {
            current = adam.step(&current, batch, opts.lr, trainable)?;
        }
    }
    Ok(current)
}
