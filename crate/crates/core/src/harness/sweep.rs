use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, StrategyGrids, SweepConfig};
use super::pipeline::{load_or_build, CheckpointFamily};
use super::store::RunStore;
use crate::error::{Error, Result};
use crate::frontier::{pareto_filter, write_points_csv, ParetoFrontier, Point};
use crate::programs::{
    build_adapter, build_alpha_reweight, build_base, build_blora_grid, build_full_dataset,
    build_full_model, build_head_only, build_icl, build_subset_training, build_urial, run_program,
    total_length, Built, LengthAccount, ProgramDescriptor, ScriptManifest,
};
use crate::tasks::{make_task, sample_dataset, Dataset, TaskSpec};
use crate::toymodel::{AdapterConfig, Checkpoint, Provenance};

/// One grid cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Cell {
    Base,
    Icl { examples: usize },
    Urial { examples: usize },
    SubsetTraining { size: usize, lr: f64 },
    FullDataset { lr: f64 },
    Adapter { rank: usize, bits: u8, lr: f64 },
    BloraGrid { rank: usize, bits: u8, lr: f64 },
    FullModel { lr: f64 },
    HeadOnly { lr: f64 },
    AlphaReweight { lr: f64 },
}

impl Cell {
    /// File-name-safe identifier, unique within a sweep.
    pub fn label(&self) -> String {
        match self {
            Cell::Base => "base".into(),
            Cell::Icl { examples } => format!("icl-k{examples}"),
            Cell::Urial { examples } => format!("urial-k{examples}"),
            Cell::SubsetTraining { size, lr } => format!("subset_training-n{size}-lr{lr}"),
            Cell::FullDataset { lr } => format!("full_dataset-lr{lr}"),
            Cell::Adapter { rank, bits, lr } => format!("adapter-r{rank}-q{bits}-lr{lr}"),
            Cell::BloraGrid { rank, bits, lr } => format!("blora_grid-r{rank}-q{bits}-lr{lr}"),
            Cell::FullModel { lr } => format!("full_model-lr{lr}"),
            Cell::HeadOnly { lr } => format!("head_only-lr{lr}"),
            Cell::AlphaReweight { lr } => format!("alpha_reweight-lr{lr}"),
        }
    }
}

/// Every cell of the grids, in a fixed order.
pub fn expand(grids: &StrategyGrids) -> Vec<Cell> {
    let mut cells = Vec::new();
    if grids.base {
        cells.push(Cell::Base);
    }
    if let Some(g) = &grids.icl {
        cells.extend(g.examples.iter().map(|&examples| Cell::Icl { examples }));
    }
    if let Some(g) = &grids.urial {
        cells.extend(g.examples.iter().map(|&examples| Cell::Urial { examples }));
    }
    if let Some(g) = &grids.subset_training {
        for &size in &g.sizes {
            cells.extend(
                g.train
                    .lrs
                    .iter()
                    .map(|&lr| Cell::SubsetTraining { size, lr }),
            );
        }
    }
    if let Some(g) = &grids.full_dataset {
        cells.extend(g.lrs.iter().map(|&lr| Cell::FullDataset { lr }));
    }
    for (grid, blora) in [(&grids.adapter, false), (&grids.blora_grid, true)] {
        if let Some(g) = grid {
            for &rank in &g.ranks {
                for &bits in &g.bits {
                    for &lr in &g.train.lrs {
                        cells.push(if blora {
                            Cell::BloraGrid { rank, bits, lr }
                        } else {
                            Cell::Adapter { rank, bits, lr }
                        });
                    }
                }
            }
        }
    }
    if let Some(g) = &grids.full_model {
        cells.extend(g.lrs.iter().map(|&lr| Cell::FullModel { lr }));
    }
    if let Some(g) = &grids.head_only {
        cells.extend(g.lrs.iter().map(|&lr| Cell::HeadOnly { lr }));
    }
    if let Some(g) = &grids.alpha_reweight {
        cells.extend(g.train.lrs.iter().map(|&lr| Cell::AlphaReweight { lr }));
    }
    cells
}

/// Training examples after the first `skip` whose inputs do not occur in
/// the first `skip`.
fn held_out(data: &Dataset, skip: usize, n: usize) -> Dataset {
    let head = data.prefix(skip);
    let mut rest = data.clone();
    rest.examples = data
        .examples
        .iter()
        .skip(skip)
        .filter(|e| head.examples.iter().all(|h| h.input != e.input))
        .take(n)
        .cloned()
        .collect();
    rest.provenance.size = rest.examples.len();
    rest
}

/// Builds the program of one cell.
pub fn build_cell(
    cell: &Cell,
    checkpoint: &Checkpoint,
    task: &TaskSpec,
    data: &Dataset,
    sweep: &SweepConfig,
) -> Result<Built> {
    let g = &sweep.strategies;
    let missing = || Error::InvalidArgument(format!("no grid for cell {}", cell.label()));
    let precision = sweep.precision;
    let seed = sweep.seed;
    let explanation = |grid: &Option<super::config::PromptGrid>| {
        grid.as_ref()
            .and_then(|p| p.explanation.clone())
            .unwrap_or_else(|| task.explanation().to_string())
    };
    match *cell {
        Cell::Base => Ok(build_base(checkpoint)),
        Cell::Icl { examples } => build_icl(checkpoint, task, &data.prefix(examples), precision),
        Cell::Urial { examples } => build_urial(
            checkpoint,
            task,
            &explanation(&g.urial),
            &data.prefix(examples),
            precision,
        ),
        Cell::SubsetTraining { size, lr } => {
            let grid = g.subset_training.as_ref().ok_or_else(missing)?;
            build_subset_training(
                checkpoint,
                task,
                &data.prefix(size),
                grid.train.fit_options(lr),
                precision,
                seed,
            )
        }
        Cell::FullDataset { lr } => {
            let grid = g.full_dataset.as_ref().ok_or_else(missing)?;
            build_full_dataset(
                checkpoint,
                task,
                data,
                grid.fit_options(lr),
                precision,
                seed,
            )
        }
        Cell::Adapter { rank, bits, lr } => {
            let grid = g.adapter.as_ref().ok_or_else(missing)?;
            let config = AdapterConfig {
                targets: grid.targets.clone(),
                rank,
                bits,
            };
            build_adapter(
                checkpoint,
                task,
                data,
                &config,
                grid.train.fit_options(lr),
                seed,
            )
        }
        Cell::BloraGrid { rank, bits, lr } => {
            let grid = g.blora_grid.as_ref().ok_or_else(missing)?;
            let mut built = build_blora_grid(
                checkpoint,
                task,
                data,
                &grid.targets,
                &[(rank, bits)],
                grid.train.fit_options(lr),
                seed,
            )?;
            Ok(built.remove(0))
        }
        Cell::FullModel { lr } => {
            let grid = g.full_model.as_ref().ok_or_else(missing)?;
            build_full_model(checkpoint, task, data, grid.fit_options(lr), seed)
        }
        Cell::HeadOnly { lr } => {
            let grid = g.head_only.as_ref().ok_or_else(missing)?;
            build_head_only(checkpoint, task, data, grid.fit_options(lr), seed)
        }
        Cell::AlphaReweight { lr } => {
            let grid = g.alpha_reweight.as_ref().ok_or_else(missing)?;
            let subset = data.prefix(grid.subset_size);
            let rest = held_out(data, grid.subset_size, grid.rest_size);
            build_alpha_reweight(
                checkpoint,
                task,
                &subset,
                &rest,
                grid.train.fit_options(lr),
                grid.alpha,
                precision,
                seed,
            )
        }
    }
}

/// Append-only record of one evaluated cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub timestamp: u64,
    pub config_hash: String,
    pub artifact_version: String,
    pub task: String,
    pub checkpoint: String,
    pub cell: Cell,
    pub strategy: String,
    pub hyperparams: BTreeMap<String, String>,
    pub seed: u64,
    pub eval_seed: u64,
    pub n_eval: usize,
    pub descriptor_path: Option<String>,
    pub kappa: Option<f64>,
    pub tau: Option<f64>,
    pub std_error: Option<f64>,
    /// Score of the builder's own adapted model, before replay.
    pub builder_tau: Option<f64>,
    pub account: Option<LengthAccount>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn point(&self) -> Option<Point> {
        let mut p = Point::new(self.kappa?, self.tau?, &self.strategy);
        p.provenance.hyperparams = self.hyperparams.clone();
        p.provenance.seed = self.seed;
        p.provenance.n_eval = self.n_eval;
        p.provenance.witness = self.descriptor_path.clone();
        Some(p)
    }
}

struct CellOutcome {
    descriptor_path: PathBuf,
    descriptor: ProgramDescriptor,
    point: Point,
    std_error: f64,
    builder_tau: f64,
    account: LengthAccount,
}

fn run_cell(
    cell: &Cell,
    checkpoint: &Checkpoint,
    task: &TaskSpec,
    data: &Dataset,
    sweep: &SweepConfig,
    manifest: &ScriptManifest,
    dir: &Path,
) -> Result<CellOutcome> {
    let built = build_cell(cell, checkpoint, task, data, sweep)?;
    let builder =
        built
            .program
            .evaluate(checkpoint.vocab(), task, sweep.eval_n, sweep.eval_seed)?;
    let path = dir.join(format!("{}.tbp", cell.label()));
    built.descriptor.save(&path)?;
    let stored = ProgramDescriptor::load(&path)?;
    let (mut point, result) = run_program(
        checkpoint,
        &stored,
        task,
        sweep.eval_n,
        sweep.eval_seed,
        manifest,
    )?;
    point.provenance.witness = Some(path.to_string_lossy().into_owned());
    Ok(CellOutcome {
        descriptor_path: path,
        account: total_length(&stored, manifest)?,
        descriptor: stored,
        point,
        std_error: result.std_error,
        builder_tau: builder.mean,
    })
}

/// Outputs of a sweep, keyed by checkpoint tag.
#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub records: Vec<RunRecord>,
    pub pools: BTreeMap<String, Vec<Point>>,
    pub frontiers: BTreeMap<String, ParetoFrontier>,
}

fn now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Runs every cell on every listed checkpoint of an already-built family.
/// Cell failures become error records.
pub fn run_sweep(
    config: &ExperimentConfig,
    family: &CheckpointFamily,
    out: &Path,
) -> Result<SweepReport> {
    config.validate()?;
    let sweep = &config.sweep;
    let task_id = sweep.task.id();
    let task = make_task(task_id, Some(sweep.task.clone()))?;
    let data = sample_dataset(&task, sweep.train_examples, sweep.seed)?;
    let manifest = ScriptManifest::measured();
    let cells = expand(&sweep.strategies);
    let config_hash = config.hash();
    let mut report = SweepReport::default();
    for tag in &sweep.checkpoints {
        let provenance = Provenance::from_name(tag)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown checkpoint {tag:?}")))?;
        let checkpoint = family.get(provenance);
        let dir = out.join("descriptors").join(task_id).join(tag);
        std::fs::create_dir_all(&dir)?;
        let outcomes: Vec<Result<CellOutcome>> = cells
            .par_iter()
            .map(|cell| run_cell(cell, checkpoint, &task, &data, sweep, &manifest, &dir))
            .collect();
        let mut pool = Vec::new();
        for (cell, outcome) in cells.iter().zip(outcomes) {
            let mut record = RunRecord {
                timestamp: now(),
                config_hash: config_hash.clone(),
                artifact_version: env!("CARGO_PKG_VERSION").to_string(),
                task: task_id.to_string(),
                checkpoint: tag.clone(),
                cell: cell.clone(),
                strategy: String::new(),
                hyperparams: BTreeMap::new(),
                seed: sweep.seed,
                eval_seed: sweep.eval_seed,
                n_eval: sweep.eval_n,
                descriptor_path: None,
                kappa: None,
                tau: None,
                std_error: None,
                builder_tau: None,
                account: None,
                error: None,
            };
            match outcome {
                Ok(o) => {
                    record.strategy = o.descriptor.strategy.name().to_string();
                    record.hyperparams = o.descriptor.hyperparams.clone();
                    record.descriptor_path = Some(o.descriptor_path.to_string_lossy().into_owned());
                    record.kappa = Some(o.point.kappa);
                    record.tau = Some(o.point.tau);
                    record.std_error = Some(o.std_error);
                    record.builder_tau = Some(o.builder_tau);
                    record.account = Some(o.account);
                    pool.push(o.point);
                }
                Err(e) => {
                    record.strategy = cell
                        .label()
                        .split('-')
                        .next()
                        .unwrap_or_default()
                        .to_string();
                    record.error = Some(format!("{}: {e}", e.kind()));
                }
            }
            report.records.push(record);
        }
        let frontier = pareto_filter(&pool);
        let fdir = out.join("frontiers");
        std::fs::create_dir_all(&fdir)?;
        write_points_csv(
            &pool,
            std::fs::File::create(fdir.join(format!("{task_id}_{tag}_pool.csv")))?,
        )?;
        frontier.write_csv(std::fs::File::create(
            fdir.join(format!("{task_id}_{tag}.csv")),
        )?)?;
        report.pools.insert(tag.clone(), pool);
        report.frontiers.insert(tag.clone(), frontier);
    }
    RunStore::new(out.join("runs.jsonl")).append(&report.records)?;
    Ok(report)
}

/// Builds or loads the checkpoints, then runs the sweep.
pub fn cmd_sweep(config: &ExperimentConfig, out: &Path) -> Result<SweepReport> {
    let family = load_or_build(&config.pipeline, out)?;
    run_sweep(config, &family, out)
}

/// Replays a stored descriptor against the family member it was built on
/// and re-evaluates it with the sweep's task and evaluation settings.
pub fn cmd_replay(
    descriptor_path: &Path,
    config: &ExperimentConfig,
    family: &CheckpointFamily,
) -> Result<Point> {
    let descriptor = ProgramDescriptor::load(descriptor_path)?;
    let checkpoint = [
        Provenance::RandomInit,
        Provenance::Pretrained,
        Provenance::Posttrained,
    ]
    .into_iter()
    .map(|p| family.get(p))
    .find(|c| c.hash() == descriptor.base_hash)
    .ok_or_else(|| {
        Error::ReplayMismatch(format!("no checkpoint with hash {}", descriptor.base_hash))
    })?;
    let sweep = &config.sweep;
    let task = make_task(sweep.task.id(), Some(sweep.task.clone()))?;
    let manifest = ScriptManifest::measured();
    let (mut point, _) = run_program(
        checkpoint,
        &descriptor,
        &task,
        sweep.eval_n,
        sweep.eval_seed,
        &manifest,
    )?;
    point.provenance.witness = Some(descriptor_path.to_string_lossy().into_owned());
    Ok(point)
}
