use std::path::{Path, PathBuf};

use super::config::PipelineConfig;
use crate::error::Result;
use crate::tasks::{make_corpus_with, make_task, sample_dataset};
use crate::toymodel::{fit_with, pretrain, Checkpoint, LineageRecord, Provenance, TensorId, Vocab};
use crate::wire::sha256_hex;

/// Random-init, pretrained and post-trained checkpoints of one model.
#[derive(Debug, Clone)]
pub struct CheckpointFamily {
    pub random_init: Checkpoint,
    pub pretrained: Checkpoint,
    pub posttrained: Checkpoint,
}

impl CheckpointFamily {
    pub fn get(&self, provenance: Provenance) -> &Checkpoint {
        match provenance {
            Provenance::RandomInit => &self.random_init,
            Provenance::Pretrained => &self.pretrained,
            Provenance::Posttrained => &self.posttrained,
        }
    }

    pub fn path(dir: &Path, provenance: Provenance) -> PathBuf {
        dir.join(format!("{}.tbck", provenance.name()))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for p in [
            Provenance::RandomInit,
            Provenance::Pretrained,
            Provenance::Posttrained,
        ] {
            self.get(p).save(&Self::path(dir, p))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Self {
            random_init: Checkpoint::load(&Self::path(dir, Provenance::RandomInit))?,
            pretrained: Checkpoint::load(&Self::path(dir, Provenance::Pretrained))?,
            posttrained: Checkpoint::load(&Self::path(dir, Provenance::Posttrained))?,
        })
    }
}

/// Post-training stand-in: supervised fine-tuning on task-format data.
pub fn posttrain(pretrained: &Checkpoint, config: &PipelineConfig) -> Result<Checkpoint> {
    let spec = &config.posttrain;
    let id = spec.task.id();
    let task = make_task(id, Some(spec.task.clone()))?;
    let data = sample_dataset(&task, spec.examples, spec.data_seed)?;
    let seqs = data.training_sequences(&task, pretrained.vocab())?;
    let model = fit_with(
        pretrained.model(),
        &seqs,
        spec.fit,
        &TensorId::ALL,
        spec.optimizer,
    )?;
    let record = LineageRecord::new("posttrain", spec.data_seed)
        .with("task", serde_json::to_string(&spec.task)?)
        .with("examples", spec.examples)
        .with("fit", serde_json::to_string(&spec.fit)?)
        .with("optimizer", serde_json::to_string(&spec.optimizer)?);
    pretrained.derive(&model, Provenance::Posttrained, record)
}

/// Builds the three-checkpoint family. Deterministic in the config.
pub fn build_family(config: &PipelineConfig) -> Result<CheckpointFamily> {
    let vocab = Vocab::default_charset();
    let m = &config.model;
    let random_init = Checkpoint::random_init(
        vocab.clone(),
        m.window,
        m.embed_dim,
        m.hidden_dim,
        m.init_seed,
    );
    let corpus = make_corpus_with(
        &config.corpus.mixture,
        &vocab,
        config.corpus.seed,
        config.corpus.tokens,
    )?;
    let pretrained = pretrain(&random_init, &corpus, config.corpus.seed, &config.pretrain)?;
    let posttrained = posttrain(&pretrained, config)?;
    Ok(CheckpointFamily {
        random_init,
        pretrained,
        posttrained,
    })
}

fn pipeline_hash(config: &PipelineConfig) -> String {
    sha256_hex(
        serde_json::to_string(config)
            .expect("config serializes")
            .as_bytes(),
    )
}

const STAMP: &str = "pipeline.sha256";

/// Writes the family under `out/checkpoints`, stamped with the config hash.
pub fn cmd_pretrain(config: &PipelineConfig, out: &Path) -> Result<CheckpointFamily> {
    let family = build_family(config)?;
    let dir = out.join("checkpoints");
    family.save(&dir)?;
    std::fs::write(dir.join(STAMP), pipeline_hash(config))?;
    Ok(family)
}

/// Loads the family from `out/checkpoints` when it was built from this
/// exact config, else rebuilds it.
pub fn load_or_build(config: &PipelineConfig, out: &Path) -> Result<CheckpointFamily> {
    let dir = out.join("checkpoints");
    if std::fs::read_to_string(dir.join(STAMP)).ok().as_deref()
        == Some(pipeline_hash(config).as_str())
    {
        if let Ok(family) = CheckpointFamily::load(&dir) {
            return Ok(family);
        }
    }
    cmd_pretrain(config, out)
}
