//! Desk-scale autoregressive models: a smoothed k-gram model and a windowed
//! neural language model, plus adapters, quantization and checkpoints.

mod adapter;
mod checkpoint;
mod kgram;
mod neural;
mod quant;
mod tensor;
mod train;
mod vocab;

pub use adapter::{train_adapter, AdapterConfig, AdapterFactor, AdapterSpec, FitOptions, MatrixId};
pub use checkpoint::{pretrain, Checkpoint, LineageRecord, Provenance};
pub use kgram::KgramModel;
pub use neural::{Activations, NeuralConfig, NeuralLm, Params, TensorId};
pub use quant::{check_bits, quantize_matrix, QuantizedTensor, SUPPORTED_BITS};
pub(crate) use tensor::dot;
pub use tensor::{Matrix, Shape};
pub use train::{
    fit, fit_with, split_documents, AdamState, LrSchedule, Optimizer, PretrainOptions,
};
pub use vocab::{Vocab, EOS, PAD};

use crate::error::Result;
use crate::Token;

/// An autoregressive next-token distribution.
pub trait ProbModel {
    fn vocab_size(&self) -> usize;

    /// `p(· | history)`: strictly positive, summing to one.
    fn next_distribution(&self, history: &[Token]) -> Result<Vec<f64>>;
}

/// Tokens after the most recent end-of-sequence marker. Models condition
/// only on this suffix, so each document starts from an empty context.
pub fn visible_context(history: &[Token]) -> &[Token] {
    match history.iter().rposition(|&t| t == EOS) {
        Some(i) => &history[i + 1..],
        None => history,
    }
}

impl<M: ProbModel + ?Sized> ProbModel for &M {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn next_distribution(&self, history: &[Token]) -> Result<Vec<f64>> {
        (**self).next_distribution(history)
    }
}
