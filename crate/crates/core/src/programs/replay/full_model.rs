use crate::error::Result;
use crate::programs::{AdaptedProgram, ProgramDescriptor};
use crate::toymodel::{NeuralLm, TensorId};

pub fn replay(base: &NeuralLm, program: &ProgramDescriptor) -> Result<AdaptedProgram> {
    let mut params = base.params().clone();
    for id in TensorId::ALL {
        *params.get_mut(id) = program.param_block(id.name())?.decode();
    }
    Ok(AdaptedProgram {
        model: base.with_params(params)?,
        prefix: Vec::new(),
    })
}
