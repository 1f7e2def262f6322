use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::DEFAULT_PRECISION;
use crate::error::{Error, Result};
use crate::programs::AlphaOptions;
use crate::tasks::{CorpusConfig, TaskConfig, DEFAULT_EVAL_N};
use crate::toymodel::{check_bits, FitOptions, MatrixId, Optimizer, PretrainOptions};
use crate::wire::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub window: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub init_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub tokens: usize,
    #[serde(default)]
    pub mixture: CorpusConfig,
}

/// Supervised fine-tuning that stands in for post-training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosttrainSpec {
    pub task: TaskConfig,
    pub examples: usize,
    pub data_seed: u64,
    pub fit: FitOptions,
    #[serde(default)]
    pub optimizer: Optimizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub model: ModelSpec,
    pub corpus: CorpusSpec,
    pub pretrain: PretrainOptions,
    pub posttrain: PosttrainSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainGrid {
    pub lrs: Vec<f64>,
    pub epochs: usize,
    pub batch_size: usize,
}

impl TrainGrid {
    pub fn fit_options(&self, lr: f64) -> FitOptions {
        FitOptions {
            lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetGrid {
    pub sizes: Vec<usize>,
    #[serde(flatten)]
    pub train: TrainGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterGrid {
    pub ranks: Vec<usize>,
    pub bits: Vec<u8>,
    #[serde(default = "all_matrices")]
    pub targets: Vec<MatrixId>,
    #[serde(flatten)]
    pub train: TrainGrid,
}

fn all_matrices() -> Vec<MatrixId> {
    MatrixId::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptGrid {
    pub examples: Vec<usize>,
    /// Task explanation; the task's fixed text when absent.
    #[serde(default)]
    pub explanation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub subset_size: usize,
    pub rest_size: usize,
    #[serde(flatten)]
    pub train: TrainGrid,
    pub alpha: AlphaOptions,
}

/// Strategy grids of one sweep. Absent strategies are skipped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StrategyGrids {
    #[serde(default)]
    pub base: bool,
    #[serde(default)]
    pub icl: Option<PromptGrid>,
    #[serde(default)]
    pub urial: Option<PromptGrid>,
    #[serde(default)]
    pub subset_training: Option<SubsetGrid>,
    #[serde(default)]
    pub full_dataset: Option<TrainGrid>,
    #[serde(default)]
    pub adapter: Option<AdapterGrid>,
    #[serde(default)]
    pub blora_grid: Option<AdapterGrid>,
    #[serde(default)]
    pub full_model: Option<TrainGrid>,
    #[serde(default)]
    pub head_only: Option<TrainGrid>,
    #[serde(default)]
    pub alpha_reweight: Option<AlphaGrid>,
}

fn default_eval_n() -> usize {
    DEFAULT_EVAL_N
}

fn default_precision() -> u32 {
    DEFAULT_PRECISION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub task: TaskConfig,
    /// Checkpoint tags: `random-init`, `pretrained`, `posttrained`.
    pub checkpoints: Vec<String>,
    #[serde(default = "default_eval_n")]
    pub eval_n: usize,
    pub eval_seed: u64,
    /// Seed of the training dataset and of every cell.
    pub seed: u64,
    pub train_examples: usize,
    #[serde(default = "default_precision")]
    pub precision: u32,
    pub strategies: StrategyGrids,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub pipeline: PipelineConfig,
    pub sweep: SweepConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let config: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sweep;
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if s.checkpoints.is_empty() {
            return bad("sweep lists no checkpoints".into());
        }
        for tag in &s.checkpoints {
            if crate::toymodel::Provenance::from_name(tag).is_none() {
                return bad(format!("unknown checkpoint tag {tag:?}"));
            }
        }
        if s.eval_n == 0 {
            return bad("eval_n must be positive".into());
        }
        let g = &s.strategies;
        for (name, grid) in [("icl", &g.icl), ("urial", &g.urial)] {
            if grid.as_ref().is_some_and(|p| p.examples.is_empty()) {
                return bad(format!("{name} grid is empty"));
            }
        }
        let trains = [
            g.subset_training.as_ref().map(|x| &x.train),
            g.full_dataset.as_ref(),
            g.adapter.as_ref().map(|x| &x.train),
            g.blora_grid.as_ref().map(|x| &x.train),
            g.full_model.as_ref(),
            g.head_only.as_ref(),
            g.alpha_reweight.as_ref().map(|x| &x.train),
        ];
        if trains.into_iter().flatten().any(|t| t.lrs.is_empty()) {
            return bad("a training grid has no learning rates".into());
        }
        if g.subset_training
            .as_ref()
            .is_some_and(|x| x.sizes.is_empty())
        {
            return bad("subset grid has no sizes".into());
        }
        for a in [&g.adapter, &g.blora_grid].into_iter().flatten() {
            if a.ranks.is_empty() || a.bits.is_empty() || a.targets.is_empty() {
                return bad("adapter grid is empty".into());
            }
            for &b in &a.bits {
                check_bits(b)?;
            }
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        sha256_hex(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        )
    }
}
