use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use taskbits::harness::{
    cmd_accounting, cmd_fixture_check, cmd_plot, cmd_pretrain, cmd_replay, cmd_sweep,
    load_or_build, ExperimentConfig,
};
use taskbits::{Error, Result};

#[derive(Parser)]
#[command(
    name = "taskbits",
    version,
    about = "Task-complexity frontiers from replayable adaptation programs"
)]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for checkpoints, descriptors, frontiers and runs.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the sweep seed (sweep) or the init seed (pretrain).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the random-init, pretrained and post-trained checkpoints.
    Pretrain,
    /// Run every grid cell and write records and frontier CSVs.
    Sweep,
    /// Render frontier CSVs as one SVG.
    Plot {
        csvs: Vec<PathBuf>,
        /// SVG destination; stdout when absent.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Check the bundled published points.
    FixtureCheck,
    /// Token, byte and parameter bit conversions.
    Accounting {
        #[arg(long)]
        tokens: Option<f64>,
        #[arg(long)]
        params: Option<f64>,
        #[arg(long, default_value_t = 16.0)]
        bits_per_param: f64,
        #[arg(long)]
        dataset_bits: Option<f64>,
    },
    /// Replay a stored descriptor and re-evaluate it.
    Replay { descriptor: PathBuf },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("--config is required".into()))?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        match cli.command {
            Command::Pretrain => config.pipeline.model.init_seed = seed,
            _ => config.sweep.seed = seed,
        }
    }
    Ok(config)
}

fn print(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("json value serializes")
    );
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    match &cli.command {
        Command::Pretrain => {
            let config = load_config(cli)?;
            let family = cmd_pretrain(&config.pipeline, &cli.out)?;
            print(&json!({
                "checkpoints": cli.out.join("checkpoints"),
                "random_init": family.random_init.hash(),
                "pretrained": family.pretrained.hash(),
                "posttrained": family.posttrained.hash(),
            }));
        }
        Command::Sweep => {
            let config = load_config(cli)?;
            let report = cmd_sweep(&config, &cli.out)?;
            let failed = report.records.iter().filter(|r| r.error.is_some()).count();
            let frontiers: serde_json::Map<String, serde_json::Value> = report
                .frontiers
                .iter()
                .map(|(tag, f)| {
                    let points: Vec<_> = f
                        .points()
                        .iter()
                        .map(|p| json!({"kappa": p.kappa, "tau": p.tau, "strategy": p.provenance.strategy}))
                        .collect();
                    (tag.clone(), json!(points))
                })
                .collect();
            print(
                &json!({"records": report.records.len(), "failed_cells": failed, "frontiers": frontiers}),
            );
        }
        Command::Plot { csvs, svg } => {
            let paths: Vec<&Path> = csvs.iter().map(PathBuf::as_path).collect();
            let doc = cmd_plot(&paths)?;
            match svg {
                Some(path) => std::fs::write(path, doc)?,
                None => print!("{doc}"),
            }
        }
        Command::FixtureCheck => {
            let checks = cmd_fixture_check();
            print(&serde_json::to_value(&checks)?);
            return Ok(checks.iter().all(|c| c.pass));
        }
        Command::Accounting {
            tokens,
            params,
            bits_per_param,
            dataset_bits,
        } => {
            let report = cmd_accounting(*tokens, *params, *bits_per_param, *dataset_bits);
            print(&serde_json::to_value(report)?);
        }
        Command::Replay { descriptor } => {
            let config = load_config(cli)?;
            let family = load_or_build(&config.pipeline, &cli.out)?;
            let p = cmd_replay(descriptor, &config, &family)?;
            print(&json!({
                "kappa": p.kappa,
                "tau": p.tau,
                "strategy": p.provenance.strategy,
                "hyperparams": p.provenance.hyperparams,
                "n_eval": p.provenance.n_eval,
            }));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!(
                "{}",
                json!({"kind": "check_failed", "message": "one or more fixture checks failed"})
            );
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("{}", json!({"kind": e.kind(), "message": e.to_string()}));
            ExitCode::FAILURE
        }
    }
}
