use super::subset;
use crate::error::{Error, Result};
use crate::programs::{AdaptedProgram, ProgramDescriptor};
use crate::toymodel::{NeuralLm, Params, TensorId};

/// Matrix groups `k` that share one coefficient per update.
pub const GROUPS: [&[TensorId]; 3] = [
    &[TensorId::Embedding],
    &[TensorId::HiddenWeight, TensorId::HiddenBias],
    &[TensorId::OutputWeight, TensorId::OutputBias],
];

/// `θ + Σ_i α_i^k Δ_i^k`, summed in update order.
pub fn combine(base: &NeuralLm, deltas: &[Params], alpha: &[[f64; 3]]) -> Result<NeuralLm> {
    let mut params = base.params().clone();
    for (delta, a) in deltas.iter().zip(alpha) {
        for (k, group) in GROUPS.iter().enumerate() {
            for &id in *group {
                params.get_mut(id).add_scaled(delta.get(id), a[k]);
            }
        }
    }
    base.with_params(params)
}

pub fn replay(base: &NeuralLm, program: &ProgramDescriptor) -> Result<AdaptedProgram> {
    let mut deltas = Vec::new();
    subset::run(base, program, |d| deltas.push(d.clone()))?;
    let block = program.param_block("alpha")?.decode();
    if block.rows() != deltas.len() || block.cols() != GROUPS.len() {
        return Err(Error::ReplayMismatch(
            "alpha block does not match the update count".into(),
        ));
    }
    let alpha: Vec<[f64; 3]> = (0..block.rows())
        .map(|i| [block.get(i, 0), block.get(i, 1), block.get(i, 2)])
        .collect();
    Ok(AdaptedProgram {
        model: combine(base, &deltas, &alpha)?,
        prefix: Vec::new(),
    })
}
