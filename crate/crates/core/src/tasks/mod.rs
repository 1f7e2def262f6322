//! Synthetic tasks `T = (X, Y, D, s)`: seeded input samplers, reference
//! solvers and deterministic scorers in `[0, 1]`.
//!
//! * `arith`: integer expressions, exact-answer match.
//! * `cipher`: sentences from a small grammar translated by letter
//!   substitution and word reversal, unigram-overlap score.
//! * `constraint`: verifiable formatting instructions, fraction of rules met.

mod arith;
mod cipher;
mod constraint;
mod corpus;
mod dataset;
mod eval;

pub use arith::{evaluate_expression, ArithConfig};
pub use cipher::{unigram_overlap, Cipher, CipherConfig};
pub use constraint::{ConstraintConfig, Instruction};
pub use corpus::{make_corpus_with, make_pretraining_corpus, CorpusConfig};
pub use dataset::{example_rng, Dataset, DatasetProvenance, Example, SeedSpace};
pub use eval::{eval_inputs, evaluate, EvalResult, GreedyResponder, Responder};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_EVAL_N: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum TaskConfig {
    Arith(ArithConfig),
    Cipher(CipherConfig),
    Constraint(ConstraintConfig),
}

impl TaskConfig {
    pub fn id(&self) -> &'static str {
        match self {
            TaskConfig::Arith(_) => "arith",
            TaskConfig::Cipher(_) => "cipher",
            TaskConfig::Constraint(_) => "constraint",
        }
    }

    pub fn default_for(id: &str) -> Result<Self> {
        match id {
            "arith" => Ok(TaskConfig::Arith(ArithConfig::default())),
            "cipher" => Ok(TaskConfig::Cipher(CipherConfig::default())),
            "constraint" => Ok(TaskConfig::Constraint(ConstraintConfig::default())),
            other => Err(Error::UnknownTask(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Arith(ArithConfig),
    Cipher(Cipher),
    Constraint(ConstraintConfig),
}

#[derive(Debug, Clone)]
pub struct TaskSpec {
    config: TaskConfig,
    kind: Kind,
}

/// Builds a task from its id, using the default configuration when
/// `config` is `None`.
pub fn make_task(id: &str, config: Option<TaskConfig>) -> Result<TaskSpec> {
    let config = match config {
        Some(c) => c,
        None => TaskConfig::default_for(id)?,
    };
    let kind = match &config {
        TaskConfig::Arith(c) => {
            c.validate()?;
            Kind::Arith(c.clone())
        }
        TaskConfig::Cipher(c) => Kind::Cipher(Cipher::new(c.clone())),
        TaskConfig::Constraint(c) => Kind::Constraint(c.clone()),
    };
    let spec = TaskSpec { config, kind };
    if spec.id() != id {
        return Err(Error::InvalidArgument(format!(
            "task id `{id}` does not match its configuration (`{}`)",
            spec.id()
        )));
    }
    Ok(spec)
}

impl TaskSpec {
    pub fn id(&self) -> &'static str {
        match self.kind {
            Kind::Arith(_) => "arith",
            Kind::Cipher(_) => "cipher",
            Kind::Constraint(_) => "constraint",
        }
    }

    pub fn config(&self) -> &TaskConfig {
        &self.config
    }

    /// Draws one input from `D`. Inputs end with `=`.
    pub fn sample_input(&self, rng: &mut impl Rng) -> String {
        match &self.kind {
            Kind::Arith(c) => format!("{}=", c.sample_expression(rng)),
            Kind::Cipher(c) => format!("{}=", c.sample_sentence(rng)),
            Kind::Constraint(c) => constraint::sample_instruction(c, rng),
        }
    }

    /// Canonical correct output for `input`.
    pub fn reference(&self, input: &str) -> Result<String> {
        let body = input.strip_suffix('=').unwrap_or(input);
        match &self.kind {
            Kind::Arith(_) => Ok(evaluate_expression(body)?.to_string()),
            Kind::Cipher(c) => Ok(c.translate(body)),
            Kind::Constraint(_) => constraint::parse_instruction(input)
                .map(|(k, s)| constraint::follow(k, s))
                .ok_or_else(|| Error::InvalidArgument(format!("not an instruction: {input:?}"))),
        }
    }

    /// Score of `output` on `input`, in `[0, 1]`. Unscoreable pairs score 0.
    pub fn score(&self, input: &str, output: &str) -> f64 {
        let body = input.strip_suffix('=').unwrap_or(input);
        match &self.kind {
            Kind::Arith(_) => match evaluate_expression(body) {
                Ok(v) => (output.trim() == v.to_string()) as u8 as f64,
                Err(_) => 0.0,
            },
            Kind::Cipher(c) => unigram_overlap(output, &c.translate(body)),
            Kind::Constraint(_) => constraint::score(input, output),
        }
    }

    /// Text presented to the model at evaluation.
    pub fn prompt(&self, input: &str) -> String {
        input.to_string()
    }

    /// Fixed task explanation used by explanation-plus-examples prompts.
    pub fn explanation(&self) -> &'static str {
        match self.kind {
            Kind::Arith(_) => "compute the value",
            Kind::Cipher(_) => "translate each word",
            Kind::Constraint(_) => "follow the rule",
        }
    }

    /// Output budget for greedy decoding.
    pub fn max_output_tokens(&self) -> usize {
        match &self.kind {
            Kind::Arith(c) => 4 + 2 * c.depth,
            Kind::Cipher(_) => 24,
            Kind::Constraint(c) => 3 * c.max_len + 2,
        }
    }

    /// Training text of one example: prompt followed by the answer.
    pub fn format_example(&self, example: &Example) -> String {
        format!("{}{}", self.prompt(&example.input), example.output)
    }
}

/// `n` i.i.d. training pairs; see [`Dataset::sample`].
pub fn sample_dataset(task: &TaskSpec, n: usize, seed: u64) -> Result<Dataset> {
    Dataset::sample(task, n, seed)
}
