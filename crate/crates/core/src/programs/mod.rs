//! Adaptation programs: construction, length accounting and replay.
//!
//! A program is a [`ProgramDescriptor`] plus the replay script for its
//! strategy. Its length is the script size (measured from the sources under
//! `replay/`) plus the payload: arithmetic-coded data and quantized
//! parameter blocks. Replay reads nothing but the base model and the
//! descriptor.

mod build;
mod descriptor;
mod replay;

pub use build::{
    build_adapter, build_alpha_reweight, build_base, build_blora_grid, build_full_dataset,
    build_full_model, build_head_only, build_icl, build_subset_training, build_urial, AlphaOptions,
    Built,
};
pub use descriptor::{ProgramDescriptor, Section};
pub use replay::alpha::GROUPS as ALPHA_GROUPS;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontier::{Point, PointProvenance};
use crate::tasks::{evaluate, EvalResult, GreedyResponder, TaskSpec};
use crate::toymodel::{Checkpoint, NeuralLm, Vocab};
use crate::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Base,
    Icl,
    Urial,
    SubsetTraining,
    FullDataset,
    Adapter,
    BloraGrid,
    FullModel,
    HeadOnly,
    AlphaReweight,
}

/// The three program views plus the full-model baseline and the hybrid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    InferenceControl,
    Data,
    Parametric,
    FullModel,
    Hybrid,
}

impl Strategy {
    pub const ALL: [Strategy; 10] = [
        Strategy::Base,
        Strategy::Icl,
        Strategy::Urial,
        Strategy::SubsetTraining,
        Strategy::FullDataset,
        Strategy::Adapter,
        Strategy::BloraGrid,
        Strategy::FullModel,
        Strategy::HeadOnly,
        Strategy::AlphaReweight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Base => "base",
            Strategy::Icl => "icl",
            Strategy::Urial => "urial",
            Strategy::SubsetTraining => "subset_training",
            Strategy::FullDataset => "full_dataset",
            Strategy::Adapter => "adapter",
            Strategy::BloraGrid => "blora_grid",
            Strategy::FullModel => "full_model",
            Strategy::HeadOnly => "head_only",
            Strategy::AlphaReweight => "alpha_reweight",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn view(self) -> View {
        match self {
            Strategy::Base | Strategy::Icl | Strategy::Urial => View::InferenceControl,
            Strategy::SubsetTraining | Strategy::FullDataset => View::Data,
            Strategy::Adapter | Strategy::BloraGrid | Strategy::HeadOnly => View::Parametric,
            Strategy::FullModel => View::FullModel,
            Strategy::AlphaReweight => View::Hybrid,
        }
    }

    /// Canonical replay sources whose combined size is the script length.
    pub fn script_sources(self) -> &'static [&'static str] {
        use replay::sources::*;
        match self {
            Strategy::Base => &[BASE],
            Strategy::Icl | Strategy::Urial => &[PROMPT],
            Strategy::SubsetTraining | Strategy::FullDataset => &[SUBSET],
            Strategy::Adapter | Strategy::BloraGrid => &[ADAPTER],
            Strategy::FullModel => &[FULL_MODEL],
            Strategy::HeadOnly => &[HEAD_ONLY],
            Strategy::AlphaReweight => &[ALPHA, SUBSET],
        }
    }
}

/// Script length in bits per strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptManifest {
    bits: BTreeMap<Strategy, u64>,
}

impl ScriptManifest {
    /// Sizes of this crate's own replay sources, in bits.
    pub fn measured() -> Self {
        let bits = Strategy::ALL
            .into_iter()
            .map(|s| {
                (
                    s,
                    s.script_sources()
                        .iter()
                        .map(|src| src.len() as u64 * 8)
                        .sum(),
                )
            })
            .collect();
        Self { bits }
    }

    /// Published script sizes of the reference implementation, for
    /// comparison only. Strategies it does not list are absent.
    pub fn reference_fixture() -> Self {
        let bits = [
            (Strategy::Base, 2952),
            (Strategy::Icl, 3704),
            (Strategy::Urial, 3704),
            (Strategy::SubsetTraining, 5704),
            (Strategy::Adapter, 2832),
            (Strategy::BloraGrid, 8376),
        ]
        .into_iter()
        .collect();
        Self { bits }
    }

    pub fn script_bits(&self, strategy: Strategy) -> Result<u64> {
        self.bits
            .get(&strategy)
            .copied()
            .ok_or_else(|| Error::MissingScript(strategy.name().to_string()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (Strategy, u64)> + '_ {
        self.bits.iter().map(|(&s, &b)| (s, b))
    }
}

/// Bit length `ℓ(p)` of a program, by component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthAccount {
    pub script_bits: u64,
    /// Exact arithmetic-coded length of all data sections.
    pub payload_data_bits: u64,
    /// Model-NLL estimate of the same data, when there is any.
    pub payload_data_nll: Option<f64>,
    pub payload_param_bits: u64,
}

impl LengthAccount {
    /// `κ = script + exact data + parameters`.
    pub fn total_bits(&self) -> f64 {
        (self.script_bits + self.payload_data_bits + self.payload_param_bits) as f64
    }

    pub fn payload_bits(&self) -> u64 {
        self.payload_data_bits + self.payload_param_bits
    }
}

pub fn total_length(
    descriptor: &ProgramDescriptor,
    manifest: &ScriptManifest,
) -> Result<LengthAccount> {
    Ok(LengthAccount {
        script_bits: manifest.script_bits(descriptor.strategy)?,
        payload_data_bits: descriptor.payload_data_bits(),
        payload_data_nll: descriptor.nll_bits,
        payload_param_bits: descriptor.payload_param_bits(),
    })
}

/// A replayed program: the adapted model and the prompt prefix it runs with.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProgram {
    pub model: NeuralLm,
    pub prefix: Vec<Token>,
}

impl AdaptedProgram {
    pub fn evaluate(
        &self,
        vocab: &Vocab,
        task: &TaskSpec,
        n: usize,
        seed: u64,
    ) -> Result<EvalResult> {
        let responder = GreedyResponder::new(&self.model, vocab).with_prefix(self.prefix.clone());
        evaluate(&responder, task, n, seed, task.max_output_tokens())
    }

    pub fn bit_eq(&self, other: &AdaptedProgram) -> bool {
        self.prefix == other.prefix && self.model.params().bit_eq(other.model.params())
    }
}

/// Rebuilds the adapted program from the base model and the descriptor.
pub fn replay(base: &NeuralLm, descriptor: &ProgramDescriptor) -> Result<AdaptedProgram> {
    let run = match descriptor.strategy {
        Strategy::Base => replay::base::replay,
        Strategy::Icl | Strategy::Urial => replay::prompt::replay,
        Strategy::SubsetTraining | Strategy::FullDataset => replay::subset::replay,
        Strategy::Adapter | Strategy::BloraGrid => replay::adapter::replay,
        Strategy::FullModel => replay::full_model::replay,
        Strategy::HeadOnly => replay::head_only::replay,
        Strategy::AlphaReweight => replay::alpha::replay,
    };
    run(base, descriptor)
}

/// Replays against a checkpoint after checking it is the recorded base.
pub fn replay_checkpoint(
    checkpoint: &Checkpoint,
    descriptor: &ProgramDescriptor,
) -> Result<AdaptedProgram> {
    let hash = checkpoint.hash();
    if hash != descriptor.base_hash {
        return Err(Error::ReplayMismatch(format!(
            "descriptor expects base {}, got {hash}",
            descriptor.base_hash
        )));
    }
    replay(checkpoint.model(), descriptor)
}

/// Serializes and re-reads the descriptor, replays it, evaluates the result
/// and returns its `(κ, τ)` point.
pub fn run_program(
    checkpoint: &Checkpoint,
    descriptor: &ProgramDescriptor,
    task: &TaskSpec,
    n_eval: usize,
    eval_seed: u64,
    manifest: &ScriptManifest,
) -> Result<(Point, EvalResult)> {
    let stored = ProgramDescriptor::from_bytes(&descriptor.to_bytes()?)?;
    let program = replay_checkpoint(checkpoint, &stored)?;
    let result = program.evaluate(checkpoint.vocab(), task, n_eval, eval_seed)?;
    let account = total_length(&stored, manifest)?;
    Ok((point_for(&stored, &account, &result), result))
}

pub fn point_for(
    descriptor: &ProgramDescriptor,
    account: &LengthAccount,
    result: &EvalResult,
) -> Point {
    Point {
        kappa: account.total_bits(),
        tau: result.mean,
        provenance: PointProvenance {
            strategy: descriptor.strategy.name().to_string(),
            hyperparams: descriptor.hyperparams.clone(),
            seed: descriptor.seed,
            n_eval: result.n,
            witness: None,
        },
    }
}
