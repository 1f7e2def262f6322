use serde::{Deserialize, Serialize};

use super::replay::{alpha, subset};
use super::{AdaptedProgram, ProgramDescriptor, Section, Strategy};
use crate::codec::{decode, encode, sequence_nll};
use crate::error::{Error, Result};
use crate::tasks::{Dataset, TaskSpec};
use crate::toymodel::{
    fit, train_adapter, AdapterConfig, Checkpoint, FitOptions, Matrix, NeuralLm, Params,
    QuantizedTensor, TensorId,
};
use crate::Token;

/// A descriptor together with the adapted program the builder produced.
#[derive(Debug, Clone)]
pub struct Built {
    pub descriptor: ProgramDescriptor,
    pub program: AdaptedProgram,
}

fn plain(model: NeuralLm) -> AdaptedProgram {
    AdaptedProgram {
        model,
        prefix: Vec::new(),
    }
}

fn set_fit(d: &mut ProgramDescriptor, opts: &FitOptions) {
    d.set("lr", opts.lr);
    d.set("epochs", opts.epochs);
    d.set("batch_size", opts.batch_size.max(1));
}

pub fn build_base(checkpoint: &Checkpoint) -> Built {
    Built {
        descriptor: ProgramDescriptor::new(Strategy::Base, &checkpoint.hash(), 0),
        program: plain(checkpoint.model().clone()),
    }
}

/// Demonstrations joined by spaces, each `input ++ output`, with a trailing
/// space before the evaluation input.
fn demonstrations(task: &TaskSpec, examples: &Dataset) -> String {
    examples
        .examples
        .iter()
        .map(|e| format!("{} ", task.format_example(e)))
        .collect()
}

fn build_prompt(
    checkpoint: &Checkpoint,
    strategy: Strategy,
    text: &str,
    precision: u32,
) -> Result<Built> {
    let model = checkpoint.model();
    let tokens = checkpoint.vocab().encode(text)?;
    let window = model.config().window;
    if tokens.len() > window {
        return Err(Error::PromptTooLong {
            len: tokens.len(),
            window,
        });
    }
    let code = encode(model, &[], &tokens, precision)?;
    if decode(model, &[], &code, tokens.len(), precision)? != tokens {
        return Err(Error::ReplayMismatch(
            "prompt does not decode to itself".into(),
        ));
    }
    let mut d = ProgramDescriptor::new(strategy, &checkpoint.hash(), 0);
    d.set("precision", precision);
    d.set("prompt_tokens", tokens.len());
    d.nll_bits = Some(sequence_nll(model, &[], &tokens, precision)?.value());
    d.sections.push(Section::Bits(code));
    Ok(Built {
        descriptor: d,
        program: AdaptedProgram {
            model: model.clone(),
            prefix: tokens,
        },
    })
}

/// Few-shot prompt of the given examples, arithmetic-coded by the model.
pub fn build_icl(
    checkpoint: &Checkpoint,
    task: &TaskSpec,
    examples: &Dataset,
    precision: u32,
) -> Result<Built> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument(
            "in-context prompt needs at least one example".into(),
        ));
    }
    let mut built = build_prompt(
        checkpoint,
        Strategy::Icl,
        &demonstrations(task, examples),
        precision,
    )?;
    built.descriptor.set("examples", examples.len());
    Ok(built)
}

/// Like [`build_icl`] with a task explanation in front.
pub fn build_urial(
    checkpoint: &Checkpoint,
    task: &TaskSpec,
    explanation: &str,
    examples: &Dataset,
    precision: u32,
) -> Result<Built> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument(
            "in-context prompt needs at least one example".into(),
        ));
    }
    let head = if explanation.is_empty() {
        String::new()
    } else {
        format!("{explanation} ")
    };
    let text = format!("{head}{}", demonstrations(task, examples));
    let mut built = build_prompt(checkpoint, Strategy::Urial, &text, precision)?;
    built.descriptor.set("examples", examples.len());
    Ok(built)
}

/// Trains on `subset` while coding each batch (first epoch only) with the
/// model state that will decode it. Returns the per-step updates too.
fn train_coded(
    checkpoint: &Checkpoint,
    task: &TaskSpec,
    strategy: Strategy,
    subset: &Dataset,
    opts: FitOptions,
    precision: u32,
    seed: u64,
) -> Result<(ProgramDescriptor, NeuralLm, Vec<Params>)> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("training subset is empty".into()));
    }
    let seqs = subset.training_sequences(task, checkpoint.vocab())?;
    let batch_size = opts.batch_size.max(1);
    let batches: Vec<&[Vec<Token>]> = seqs.chunks(batch_size).collect();
    let mut d = ProgramDescriptor::new(strategy, &checkpoint.hash(), seed);
    set_fit(&mut d, &opts);
    d.set("precision", precision);
    d.set("n_examples", seqs.len());
    let mut model = checkpoint.model().clone();
    let mut deltas = Vec::new();
    let mut nll = 0.0;
    for epoch in 0..opts.epochs {
        for batch in &batches {
            if epoch == 0 {
                let tokens: Vec<Token> = batch.concat();
                let code = encode(&model, &[], &tokens, precision)?;
                if subset::decode_batch(&model, &code, batch.len(), precision)? != *batch {
                    return Err(Error::ReplayMismatch(
                        "batch does not decode to itself".into(),
                    ));
                }
                nll += sequence_nll(&model, &[], &tokens, precision)?.value();
                d.sections.push(Section::Bits(code));
            }
            let (next, delta) = model.train_step_with_delta(batch, opts.lr, &TensorId::ALL)?;
            deltas.push(delta);
            model = next;
        }
    }
    if opts.epochs > 0 {
        d.nll_bits = Some(nll);
    }
    Ok((d, model, deltas))
}

pub fn build_subset_training(
    checkpoint: &Checkpoint,
    task: &TaskSpec,
    subset: &Dataset,
    opts: FitOptions,
    precision: u32,
    seed: u64,
) -> Result<Built> {
    let (descriptor, model, _) = train_coded(
        checkpoint,
        task,
        Strategy::SubsetTraining,
        subset,
        opts,
        precision,
        seed,
    )?;
    Ok(Built {
        descriptor,
        program: plain(model),
    })
}

/// Subset training on the whole training set.
pub fn build_full_dataset(
    checkpoint: &Checkpoint,
    task: &TaskSpec,
    data: &Dataset,
    opts: FitOptions,
    precision: u32,
    seed: u64,
) -> Result<Built> {
    let (descriptor, model, _) = train_coded(
        checkpoint,
        task,
        Strategy::FullDataset,
        data,
        opts,
        precision,
        seed,
    )?;
    Ok(Built {
        descriptor,
        program: plain(model),
    })
}

fn params_section(tag: &str, m: &Matrix, bits: u8) -> Result<Section> {
    Ok(Section::Params {
        tag: tag.to_string(),
        tensor: QuantizedTensor::encode(m, bits)?,
    })
}

pub fn build_adapter(
    checkpoint: &Checkpoint,
    task: &TaskSpec,
    data: &Dataset,
    config: &AdapterConfig,
    opts: FitOptions,
    seed: u64,
) -> Result<Built> {
    adapter_with(
        checkpoint,
        task,
        data,
        config,
        opts,
        seed,
        Strategy::Adapter,
    )
}

fn adapter_with(
    checkpoint: &Checkpoint,
    task: &TaskSpec,
    data: &Dataset,
    config: &AdapterConfig,
    opts: FitOptions,
    seed: u64,
    strategy: Strategy,
) -> Result<Built> {
    let seqs = data.training_sequences(task, checkpoint.vocab())?;
    let spec = train_adapter(checkpoint.model(), config, &seqs, opts, seed)?;
    let mut d = ProgramDescriptor::new(strategy, &checkpoint.hash(), seed);
    set_fit(&mut d, &opts);
    d.set("rank", config.rank);
    d.set("bits", config.bits);
    let names: Vec<&str> = spec.factors.iter().map(|f| f.target.name()).collect();
    d.set("targets", names.join(","));
    for f in &spec.factors {
        d.sections.push(params_section(
            &format!("{}.a", f.target.name()),
            &f.a,
            f.bits,
        )?);
        d.sections.push(params_section(
            &format!("{}.b", f.target.name()),
            &f.b,
            f.bits,
        )?);
    }
    Ok(Built {
        descriptor: d,
        program: plain(spec.apply(checkpoint.model())?),
    })
}

/// One adapter per `(rank, bits)` cell. Picking good cells is left to the
/// frontier.
pub fn build_blora_grid(
    checkpoint: &Checkpoint,
    task: &TaskSpec,
    data: &Dataset,
    targets: &[crate::toymodel::MatrixId],
    grid: &[(usize, u8)],
    opts: FitOptions,
    seed: u64,
) -> Result<Vec<Built>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("adapter grid is empty".into()));
    }
    grid.iter()
        .map(|&(rank, bits)| {
            let config = AdapterConfig {
                targets: targets.to_vec(),
                rank,
                bits,
            };
            adapter_with(
                checkpoint,
                task,
                data,
                &config,
                opts,
                seed,
                Strategy::BloraGrid,
            )
        })
        .collect()
}

fn snapshot(
    checkpoint: &Checkpoint,
    task: &TaskSpec,
    data: &Dataset,
    opts: FitOptions,
    seed: u64,
    strategy: Strategy,
    trainable: &[TensorId],
) -> Result<Built> {
    let seqs = data.training_sequences(task, checkpoint.vocab())?;
    let trained = fit(checkpoint.model(), &seqs, opts, trainable)?.to_half_precision();
    let mut d = ProgramDescriptor::new(strategy, &checkpoint.hash(), seed);
    set_fit(&mut d, &opts);
    for &id in trainable {
        d.sections
            .push(params_section(id.name(), trained.tensor(id), 16)?);
    }
    Ok(Built {
        descriptor: d,
        program: plain(trained),
    })
}

/// Fine-tunes every tensor and ships the 16-bit snapshot.
pub fn build_full_model(
    checkpoint: &Checkpoint,
    task: &TaskSpec,
    data: &Dataset,
    opts: FitOptions,
    seed: u64,
) -> Result<Built> {
    snapshot(
        checkpoint,
        task,
        data,
        opts,
        seed,
        Strategy::FullModel,
        &TensorId::ALL,
    )
}

/// Fine-tunes only the output projection and ships it at 16 bits.
pub fn build_head_only(
    checkpoint: &Checkpoint,
    task: &TaskSpec,
    data: &Dataset,
    opts: FitOptions,
    seed: u64,
) -> Result<Built> {
    snapshot(
        checkpoint,
        task,
        data,
        opts,
        seed,
        Strategy::HeadOnly,
        &[TensorId::OutputWeight, TensorId::OutputBias],
    )
}

/// Schedule for the reweighting coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaOptions {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

/// Subset training that records every update `Δ_i`, then learns one
/// coefficient per (update, matrix group) on `rest` with the base frozen.
#[allow(clippy::too_many_arguments)]
pub fn build_alpha_reweight(
    checkpoint: &Checkpoint,
    task: &TaskSpec,
    subset: &Dataset,
    rest: &Dataset,
    opts: FitOptions,
    alpha_opts: AlphaOptions,
    precision: u32,
    seed: u64,
) -> Result<Built> {
    if let Some(shared) = rest
        .examples
        .iter()
        .find(|r| subset.examples.iter().any(|s| s.input == r.input))
    {
        return Err(Error::InvalidArgument(format!(
            "subset and rest share the input {:?}",
            shared.input
        )));
    }
    let (mut d, _, deltas) = train_coded(
        checkpoint,
        task,
        Strategy::AlphaReweight,
        subset,
        opts,
        precision,
        seed,
    )?;
    d.set("alpha_lr", alpha_opts.lr);
    d.set("alpha_epochs", alpha_opts.epochs);
    let base = checkpoint.model();
    let rest_seqs = rest.training_sequences(task, checkpoint.vocab())?;
    let mut alpha = vec![[1.0f64; 3]; deltas.len()];
    for _ in 0..alpha_opts.epochs {
        for batch in rest_seqs.chunks(alpha_opts.batch_size.max(1)) {
            let current = alpha::combine(base, &deltas, &alpha)?;
            let (loss, grad) = current.loss_and_grad(batch)?;
            if !loss.is_finite() {
                return Err(Error::Divergence(loss));
            }
            for (a, delta) in alpha.iter_mut().zip(&deltas) {
                for (k, group) in alpha::GROUPS.iter().enumerate() {
                    let g: f64 = group
                        .iter()
                        .map(|&id| crate::toymodel::dot(grad.get(id).data(), delta.get(id).data()))
                        .sum();
                    a[k] -= alpha_opts.lr * g;
                }
            }
            if alpha.iter().flatten().any(|a| !a.is_finite()) {
                return Err(Error::Divergence(f64::NAN));
            }
        }
    }
    let block = Matrix::from_vec(deltas.len(), 3, alpha.concat());
    let tensor = QuantizedTensor::encode(&block, 16)?;
    let stored = tensor.decode();
    let rounded: Vec<[f64; 3]> = (0..stored.rows())
        .map(|i| [stored.get(i, 0), stored.get(i, 1), stored.get(i, 2)])
        .collect();
    d.sections.push(Section::Params {
        tag: "alpha".into(),
        tensor,
    });
    Ok(Built {
        descriptor: d,
        program: plain(alpha::combine(base, &deltas, &rounded)?),
    })
}
