use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{example_rng, SeedSpace};
use super::TaskSpec;
use crate::error::{Error, Result};
use crate::toymodel::{NeuralLm, Vocab, EOS};
use crate::Token;

/// Anything that maps a prompt to an output string.
pub trait Responder: Sync {
    fn respond(&self, prompt: &str, max_tokens: usize) -> String;
}

impl<F: Fn(&str, usize) -> String + Sync> Responder for F {
    fn respond(&self, prompt: &str, max_tokens: usize) -> String {
        self(prompt, max_tokens)
    }
}

/// Greedy decoding from a model with an optional fixed token prefix.
#[derive(Debug, Clone)]
pub struct GreedyResponder<'a> {
    pub model: &'a NeuralLm,
    pub vocab: &'a Vocab,
    pub prefix: Vec<Token>,
}

impl<'a> GreedyResponder<'a> {
    pub fn new(model: &'a NeuralLm, vocab: &'a Vocab) -> Self {
        Self {
            model,
            vocab,
            prefix: Vec::new(),
        }
    }

    pub fn with_prefix(mut self, prefix: Vec<Token>) -> Self {
        self.prefix = prefix;
        self
    }

    /// Generated tokens for `prompt`, stopping before end-of-sequence.
    pub fn generate(&self, prompt: &[Token], max_tokens: usize) -> Vec<Token> {
        let mut history: Vec<Token> = self.prefix.iter().chain(prompt).copied().collect();
        let start = history.len();
        for _ in 0..max_tokens {
            let next = self.model.greedy_next(&history);
            if next == EOS {
                break;
            }
            history.push(next);
        }
        history.split_off(start)
    }
}

impl Responder for GreedyResponder<'_> {
    fn respond(&self, prompt: &str, max_tokens: usize) -> String {
        match self.vocab.encode(prompt) {
            Ok(tokens) => self.vocab.decode(&self.generate(&tokens, max_tokens)),
            Err(_) => String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub mean: f64,
    pub n: usize,
    pub std_error: f64,
}

impl EvalResult {
    pub fn from_scores(scores: &[f64]) -> Self {
        let n = scores.len();
        let mean = scores.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, n, std_error }
    }
}

/// Mean score over `n` fresh inputs from the evaluation namespace.
pub fn evaluate(
    responder: &dyn Responder,
    task: &TaskSpec,
    n: usize,
    seed: u64,
    max_tokens: usize,
) -> Result<EvalResult> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "evaluation needs at least one sample".into(),
        ));
    }
    let scores: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let input = task.sample_input(&mut example_rng(task.id(), SeedSpace::Eval, seed, i));
            let output = responder.respond(&task.prompt(&input), max_tokens);
            task.score(&input, &output).clamp(0.0, 1.0)
        })
        .collect();
    Ok(EvalResult::from_scores(&scores))
}

/// The `n` evaluation inputs `evaluate` draws for `seed`.
pub fn eval_inputs(task: &TaskSpec, n: usize, seed: u64) -> Vec<String> {
    (0..n as u64)
        .map(|i| task.sample_input(&mut example_rng(task.id(), SeedSpace::Eval, seed, i)))
        .collect()
}
