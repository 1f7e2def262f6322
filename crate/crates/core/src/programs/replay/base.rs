use crate::error::Result;
use crate::programs::{AdaptedProgram, ProgramDescriptor};
use crate::toymodel::NeuralLm;

pub fn replay(base: &NeuralLm, _program: &ProgramDescriptor) -> Result<AdaptedProgram> {
    Ok(AdaptedProgram {
        model: base.clone(),
        prefix: Vec::new(),
    })
}
