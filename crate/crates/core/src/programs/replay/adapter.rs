use crate::error::{Error, Result};
use crate::programs::{AdaptedProgram, ProgramDescriptor};
use crate::toymodel::{AdapterFactor, AdapterSpec, MatrixId, NeuralLm};

pub fn replay(base: &NeuralLm, program: &ProgramDescriptor) -> Result<AdaptedProgram> {
    let mut factors = Vec::new();
    for name in program.get("targets")?.split(',') {
        let target = MatrixId::from_name(name)
            .ok_or_else(|| Error::ReplayMismatch(format!("unknown adapter target {name:?}")))?;
        let a = program.param_block(&format!("{name}.a"))?;
        let b = program.param_block(&format!("{name}.b"))?;
        factors.push(AdapterFactor {
            target,
            rank: a.cols,
            bits: a.bits,
            a: a.decode(),
            b: b.decode(),
        });
    }
    Ok(AdaptedProgram {
        model: AdapterSpec { factors }.apply(base)?,
        prefix: Vec::new(),
    })
}
