use crate::codec::{decode, BitString};
use crate::error::Result;
use crate::programs::{AdaptedProgram, ProgramDescriptor};
use crate::toymodel::NeuralLm;

pub fn replay(base: &NeuralLm, program: &ProgramDescriptor) -> Result<AdaptedProgram> {
    let precision = program.parse("precision")?;
    let n = program.parse("prompt_tokens")?;
    let empty = BitString::new();
    let code = program.bit_sections().next().unwrap_or(&empty);
    Ok(AdaptedProgram {
        model: base.clone(),
        prefix: decode(base, &[], code, n, precision)?,
    })
}
