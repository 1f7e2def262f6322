use crate::codec::{decode_until, BitString};
use crate::error::{Error, Result};
use crate::programs::{AdaptedProgram, ProgramDescriptor};
use crate::toymodel::{split_documents, NeuralLm, Params, TensorId, EOS};
use crate::Token;

/// Sizes of the consecutive batches of `n` examples.
pub fn batch_sizes(n: usize, batch_size: usize) -> Vec<usize> {
    let b = batch_size.max(1);
    (0..n.div_ceil(b)).map(|i| b.min(n - i * b)).collect()
}

/// Decodes one batch of `count` end-of-sequence-terminated examples.
pub fn decode_batch(
    model: &NeuralLm,
    code: &BitString,
    count: usize,
    precision: u32,
) -> Result<Vec<Vec<Token>>> {
    let tokens = decode_until(model, &[], code, precision, |out| {
        out.iter().filter(|&&t| t == EOS).count() >= count
    })?;
    Ok(split_documents(&tokens))
}

/// Decodes each batch with the model as trained so far and re-applies the
/// gradient steps. `on_step` sees every applied update.
pub fn run(
    base: &NeuralLm,
    program: &ProgramDescriptor,
    mut on_step: impl FnMut(&Params),
) -> Result<NeuralLm> {
    let lr: f64 = program.parse("lr")?;
    let epochs: usize = program.parse("epochs")?;
    let precision = program.parse("precision")?;
    let sizes = batch_sizes(program.parse("n_examples")?, program.parse("batch_size")?);
    let mut codes = program.bit_sections();
    let mut batches = Vec::with_capacity(sizes.len());
    let mut model = base.clone();
    for epoch in 0..epochs {
        for (i, &count) in sizes.iter().enumerate() {
            if epoch == 0 {
                let code = codes.next().ok_or_else(|| {
                    Error::ReplayMismatch("fewer data sections than batches".into())
                })?;
                batches.push(decode_batch(&model, code, count, precision)?);
            }
            let (next, delta) = model.train_step_with_delta(&batches[i], lr, &TensorId::ALL)?;
            on_step(&delta);
            model = next;
        }
    }
    Ok(model)
}

pub fn replay(base: &NeuralLm, program: &ProgramDescriptor) -> Result<AdaptedProgram> {
    Ok(AdaptedProgram {
        model: run(base, program, |_| {})?,
        prefix: Vec::new(),
    })
}
