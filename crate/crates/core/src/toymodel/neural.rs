//! Windowed character language model: embedding lookup over a fixed
//! window, one tanh hidden layer, softmax output. Gradients are the
//! closed-form backpropagation of that architecture.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tensor::{dot, Matrix};
use super::{visible_context, ProbModel, PAD};
use crate::error::{Error, Result};
use crate::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeuralConfig {
    pub vocab_size: usize,
    pub window: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

impl Default for NeuralConfig {
    fn default() -> Self {
        Self {
            vocab_size: 72,
            window: 16,
            embed_dim: 16,
            hidden_dim: 64,
        }
    }
}

impl NeuralConfig {
    pub fn shape(&self, id: TensorId) -> (usize, usize) {
        match id {
            TensorId::Embedding => (self.vocab_size, self.embed_dim),
            TensorId::HiddenWeight => (self.window * self.embed_dim, self.hidden_dim),
            TensorId::HiddenBias => (1, self.hidden_dim),
            TensorId::OutputWeight => (self.hidden_dim, self.vocab_size),
            TensorId::OutputBias => (1, self.vocab_size),
        }
    }

    pub fn parameter_count(&self) -> usize {
        TensorId::ALL
            .iter()
            .map(|&id| {
                let (r, c) = self.shape(id);
                r * c
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorId {
    Embedding,
    HiddenWeight,
    HiddenBias,
    OutputWeight,
    OutputBias,
}

impl TensorId {
    pub const ALL: [TensorId; 5] = [
        TensorId::Embedding,
        TensorId::HiddenWeight,
        TensorId::HiddenBias,
        TensorId::OutputWeight,
        TensorId::OutputBias,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            TensorId::Embedding => "embedding",
            TensorId::HiddenWeight => "hidden_weight",
            TensorId::HiddenBias => "hidden_bias",
            TensorId::OutputWeight => "output_weight",
            TensorId::OutputBias => "output_bias",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }
}

/// The five parameter tensors, indexed by [`TensorId`]. Also used for
/// gradients and weight deltas.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    tensors: Vec<Matrix>,
}

impl Params {
    pub fn zeros(config: &NeuralConfig) -> Self {
        Self {
            tensors: TensorId::ALL
                .iter()
                .map(|&id| {
                    let (r, c) = config.shape(id);
                    Matrix::zeros(r, c)
                })
                .collect(),
        }
    }

    pub fn get(&self, id: TensorId) -> &Matrix {
        &self.tensors[id.index()]
    }

    pub fn get_mut(&mut self, id: TensorId) -> &mut Matrix {
        &mut self.tensors[id.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (TensorId, &Matrix)> {
        TensorId::ALL.into_iter().zip(&self.tensors)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Matrix::is_finite)
    }

    pub fn add_assign(&mut self, other: &Params) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_assign(b);
        }
    }

    pub fn bit_eq(&self, other: &Params) -> bool {
        self.tensors
            .iter()
            .zip(&other.tensors)
            .all(|(a, b)| a.bit_eq(b))
    }
}

/// Values computed by one forward pass over a single window.
#[derive(Debug, Clone)]
pub struct Activations {
    pub window: Vec<Token>,
    pub input: Vec<f64>,
    pub hidden: Vec<f64>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralLm {
    config: NeuralConfig,
    params: Params,
}

const GRAD_CHUNK: usize = 64;

impl NeuralLm {
    pub fn zeros(config: NeuralConfig) -> Self {
        Self {
            params: Params::zeros(&config),
            config,
        }
    }

    /// Seeded initialization: embeddings uniform in ±0.5, weights uniform
    /// in ±1/√fan_in, zero biases.
    pub fn random(config: NeuralConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = Self::zeros(config);
        let fill = |m: &mut Matrix, bound: f64, rng: &mut ChaCha8Rng| {
            for x in m.data_mut() {
                *x = rng.random_range(-bound..bound);
            }
        };
        fill(model.params.get_mut(TensorId::Embedding), 0.5, &mut rng);
        let fan_in = (config.window * config.embed_dim) as f64;
        fill(
            model.params.get_mut(TensorId::HiddenWeight),
            1.0 / fan_in.sqrt(),
            &mut rng,
        );
        fill(
            model.params.get_mut(TensorId::OutputWeight),
            1.0 / (config.hidden_dim as f64).sqrt(),
            &mut rng,
        );
        model
    }

    pub fn from_params(config: NeuralConfig, params: Params) -> Result<Self> {
        for (id, m) in params.iter() {
            if m.shape() != config.shape(id) {
                return Err(Error::format(
                    "parameters",
                    format!(
                        "{} has shape {:?}, expected {:?}",
                        id.name(),
                        m.shape(),
                        config.shape(id)
                    ),
                ));
            }
        }
        if !params.is_finite() {
            return Err(Error::format("parameters", "non-finite value"));
        }
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &NeuralConfig {
        &self.config
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn tensor(&self, id: TensorId) -> &Matrix {
        self.params.get(id)
    }

    pub fn parameter_count(&self) -> usize {
        self.config.parameter_count()
    }

    pub fn with_params(&self, params: Params) -> Result<Self> {
        Self::from_params(self.config, params)
    }

    /// Rounds every parameter to the nearest IEEE half-precision value.
    pub fn to_half_precision(&self) -> Self {
        let mut out = self.clone();
        for m in out.params.tensors.iter_mut() {
            *m = m.map(round_f16);
        }
        out
    }

    /// The `window` most recent visible tokens, left-padded.
    pub fn window_for(&self, history: &[Token]) -> Vec<Token> {
        let visible = visible_context(history);
        let w = self.config.window;
        let take = visible.len().min(w);
        let mut window = vec![PAD; w - take];
        window.extend_from_slice(&visible[visible.len() - take..]);
        window
    }

    pub fn forward(&self, window: &[Token]) -> Activations {
        let c = &self.config;
        let emb = self.params.get(TensorId::Embedding);
        let mut input = Vec::with_capacity(c.window * c.embed_dim);
        for &t in window {
            input.extend_from_slice(emb.row(t as usize));
        }

        let w1 = self.params.get(TensorId::HiddenWeight);
        let mut hidden = self.params.get(TensorId::HiddenBias).data().to_vec();
        for (i, &x) in input.iter().enumerate() {
            if x != 0.0 {
                for (h, &w) in hidden.iter_mut().zip(w1.row(i)) {
                    *h += x * w;
                }
            }
        }
        for h in hidden.iter_mut() {
            *h = h.tanh();
        }

        let w2 = self.params.get(TensorId::OutputWeight);
        let mut logits = self.params.get(TensorId::OutputBias).data().to_vec();
        for (j, &h) in hidden.iter().enumerate() {
            for (l, &w) in logits.iter_mut().zip(w2.row(j)) {
                *l += h * w;
            }
        }
        Activations {
            window: window.to_vec(),
            input,
            hidden,
            probs: softmax(&logits),
        }
    }

    /// Accumulates `scale · ∂(−ln p(target))/∂θ` into `grad`.
    fn backward(&self, act: &Activations, target: Token, scale: f64, grad: &mut Params) {
        let c = &self.config;
        let mut dlogits: Vec<f64> = act.probs.iter().map(|p| p * scale).collect();
        dlogits[target as usize] -= scale;

        {
            let gw2 = grad.get_mut(TensorId::OutputWeight);
            for (j, &h) in act.hidden.iter().enumerate() {
                for (g, &d) in gw2.row_mut(j).iter_mut().zip(&dlogits) {
                    *g += h * d;
                }
            }
        }
        for (g, &d) in grad
            .get_mut(TensorId::OutputBias)
            .data_mut()
            .iter_mut()
            .zip(&dlogits)
        {
            *g += d;
        }

        let w2 = self.params.get(TensorId::OutputWeight);
        let dpre: Vec<f64> = act
            .hidden
            .iter()
            .enumerate()
            .map(|(j, &h)| dot(w2.row(j), &dlogits) * (1.0 - h * h))
            .collect();

        {
            let gw1 = grad.get_mut(TensorId::HiddenWeight);
            for (i, &x) in act.input.iter().enumerate() {
                if x != 0.0 {
                    for (g, &d) in gw1.row_mut(i).iter_mut().zip(&dpre) {
                        *g += x * d;
                    }
                }
            }
        }
        for (g, &d) in grad
            .get_mut(TensorId::HiddenBias)
            .data_mut()
            .iter_mut()
            .zip(&dpre)
        {
            *g += d;
        }

        let w1 = self.params.get(TensorId::HiddenWeight);
        let gemb = grad.get_mut(TensorId::Embedding);
        for (p, &t) in act.window.iter().enumerate() {
            let row = gemb.row_mut(t as usize);
            for (e, g) in row.iter_mut().enumerate() {
                *g += dot(w1.row(p * c.embed_dim + e), &dpre);
            }
        }
    }

    fn check_tokens(&self, tokens: &[Token]) -> Result<()> {
        match tokens
            .iter()
            .find(|&&t| t as usize >= self.config.vocab_size)
        {
            Some(&t) => Err(Error::UnknownToken {
                token: t as u32,
                vocab: self.config.vocab_size,
            }),
            None => Ok(()),
        }
    }

    /// Every (window, target) training position of a batch. Each sequence
    /// starts from an empty context.
    fn positions(&self, batch: &[Vec<Token>]) -> Result<Vec<(Vec<Token>, Token)>> {
        let mut out = Vec::new();
        for seq in batch {
            self.check_tokens(seq)?;
            for i in 0..seq.len() {
                out.push((self.window_for(&seq[..i]), seq[i]));
            }
        }
        Ok(out)
    }

    /// Mean cross-entropy (nats per token) over all positions of the batch.
    pub fn loss(&self, batch: &[Vec<Token>]) -> Result<f64> {
        let positions = self.positions(batch)?;
        if positions.is_empty() {
            return Ok(0.0);
        }
        let total: f64 = positions
            .par_chunks(GRAD_CHUNK)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|(w, t)| -self.forward(w).probs[*t as usize].ln())
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        Ok(total / positions.len() as f64)
    }

    /// Mean cross-entropy and its gradient. Chunks are reduced in a fixed
    /// order, so the result does not depend on the thread count.
    pub fn loss_and_grad(&self, batch: &[Vec<Token>]) -> Result<(f64, Params)> {
        let positions = self.positions(batch)?;
        let mut grad = Params::zeros(&self.config);
        if positions.is_empty() {
            return Ok((0.0, grad));
        }
        let scale = 1.0 / positions.len() as f64;
        let partials: Vec<(f64, Params)> = positions
            .par_chunks(GRAD_CHUNK)
            .map(|chunk| {
                let mut g = Params::zeros(&self.config);
                let mut loss = 0.0;
                for (w, t) in chunk {
                    let act = self.forward(w);
                    loss -= act.probs[*t as usize].ln();
                    self.backward(&act, *t, scale, &mut g);
                }
                (loss, g)
            })
            .collect();
        let mut loss = 0.0;
        for (l, g) in &partials {
            loss += l;
            grad.add_assign(g);
        }
        Ok((loss * scale, grad))
    }

    /// One full-batch gradient-descent step on the mean cross-entropy.
    pub fn train_step(&self, batch: &[Vec<Token>], lr: f64) -> Result<NeuralLm> {
        self.train_step_masked(batch, lr, &TensorId::ALL)
    }

    /// Gradient step restricted to the listed tensors; the rest stay
    /// bit-identical.
    pub fn train_step_masked(
        &self,
        batch: &[Vec<Token>],
        lr: f64,
        trainable: &[TensorId],
    ) -> Result<NeuralLm> {
        Ok(self.train_step_with_delta(batch, lr, trainable)?.0)
    }

    /// Like [`train_step_masked`](Self::train_step_masked), also returning
    /// the applied update `-(lr · g)` so that `θ + Δ` reproduces the step
    /// exactly.
    pub fn train_step_with_delta(
        &self,
        batch: &[Vec<Token>],
        lr: f64,
        trainable: &[TensorId],
    ) -> Result<(NeuralLm, Params)> {
        let (loss, grad) = self.loss_and_grad(batch)?;
        if !loss.is_finite() {
            return Err(Error::Divergence(loss));
        }
        let mut delta = Params::zeros(&self.config);
        for &id in trainable {
            *delta.get_mut(id) = grad.get(id).map(|g| -(lr * g));
        }
        let mut next = self.clone();
        for &id in trainable {
            next.params.get_mut(id).add_assign(delta.get(id));
        }
        if !next.params.is_finite() {
            return Err(Error::Divergence(f64::NAN));
        }
        Ok((next, delta))
    }

    /// Index of the most probable next token, lowest index on ties.
    pub fn greedy_next(&self, history: &[Token]) -> Token {
        let probs = self.forward(&self.window_for(history)).probs;
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        best as Token
    }
}

impl ProbModel for NeuralLm {
    fn vocab_size(&self) -> usize {
        self.config.vocab_size
    }

    fn next_distribution(&self, history: &[Token]) -> Result<Vec<f64>> {
        self.check_tokens(history)?;
        Ok(self.forward(&self.window_for(history)).probs)
    }
}

pub(crate) fn round_f16(x: f64) -> f64 {
    half::f16::from_f64(x).to_f64()
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
