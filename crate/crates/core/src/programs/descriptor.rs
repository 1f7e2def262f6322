//! Program descriptor files.
//!
//! A descriptor starts with a UTF-8 text header, one `key=value` per line:
//!
//! ```text
//! taskbits-program 1
//! strategy=subset_training
//! base=<sha256 of the base checkpoint file>
//! seed=7
//! nll_bits=812.25
//! hp.batch_size=16
//! ...
//! end
//! ```
//!
//! followed by `u32` section count and the sections, little-endian:
//!
//! * kind `0`: a bit string (`u64` bit count, then the packed bits);
//! * kind `1`: a parameter block (`str` tag, `u32` rows, `u32` cols, `u8`
//!   bits, `f32` scale, `u64` byte length, codes packed at `bits` each).

use std::collections::BTreeMap;
use std::path::Path;

use super::Strategy;
use crate::codec::BitString;
use crate::error::{Error, Result};
use crate::toymodel::QuantizedTensor;
use crate::wire::{pack_codes, unpack_codes, ByteReader, ByteWriter};

const MAGIC_LINE: &str = "taskbits-program 1";

#[derive(Debug, Clone, PartialEq)]
pub enum Section {
    Bits(BitString),
    Params {
        tag: String,
        tensor: QuantizedTensor,
    },
}

impl Section {
    pub fn payload_data_bits(&self) -> u64 {
        match self {
            Section::Bits(b) => b.len() as u64,
            Section::Params { .. } => 0,
        }
    }

    pub fn payload_param_bits(&self) -> u64 {
        match self {
            Section::Bits(_) => 0,
            Section::Params { tensor, .. } => tensor.payload_bits(),
        }
    }
}

/// A replayable adaptation program.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramDescriptor {
    pub strategy: Strategy,
    pub base_hash: String,
    pub seed: u64,
    pub hyperparams: BTreeMap<String, String>,
    pub sections: Vec<Section>,
    /// Model-NLL size estimate of the data sections, when there are any.
    pub nll_bits: Option<f64>,
}

impl ProgramDescriptor {
    pub fn new(strategy: Strategy, base_hash: &str, seed: u64) -> Self {
        Self {
            strategy,
            base_hash: base_hash.to_string(),
            seed,
            hyperparams: BTreeMap::new(),
            sections: Vec::new(),
            nll_bits: None,
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.hyperparams.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.hyperparams
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| {
                Error::format(
                    "program descriptor",
                    format!("{} descriptor lacks `{key}`", self.strategy.name()),
                )
            })
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse().map_err(|_| {
            Error::format(
                "program descriptor",
                format!("bad value {raw:?} for `{key}`"),
            )
        })
    }

    pub fn bit_sections(&self) -> impl Iterator<Item = &BitString> {
        self.sections.iter().filter_map(|s| match s {
            Section::Bits(b) => Some(b),
            Section::Params { .. } => None,
        })
    }

    pub fn param_block(&self, tag: &str) -> Result<&QuantizedTensor> {
        self.sections
            .iter()
            .find_map(|s| match s {
                Section::Params { tag: t, tensor } if t == tag => Some(tensor),
                _ => None,
            })
            .ok_or_else(|| {
                Error::format(
                    "program descriptor",
                    format!("missing parameter block `{tag}`"),
                )
            })
    }

    pub fn payload_data_bits(&self) -> u64 {
        self.sections.iter().map(Section::payload_data_bits).sum()
    }

    pub fn payload_param_bits(&self) -> u64 {
        self.sections.iter().map(Section::payload_param_bits).sum()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut header = format!(
            "{MAGIC_LINE}\nstrategy={}\nbase={}\nseed={}\n",
            self.strategy.name(),
            self.base_hash,
            self.seed
        );
        if let Some(nll) = self.nll_bits {
            header.push_str(&format!("nll_bits={nll}\n"));
        }
        for (k, v) in &self.hyperparams {
            if k.contains(['=', '\n']) || v.contains('\n') {
                return Err(Error::InvalidArgument(format!(
                    "hyperparameter {k:?} cannot be written"
                )));
            }
            header.push_str(&format!("hp.{k}={v}\n"));
        }
        header.push_str("end\n");
        let mut w = ByteWriter::new();
        w.bytes(header.as_bytes());
        w.u32(self.sections.len() as u32);
        for s in &self.sections {
            match s {
                Section::Bits(b) => {
                    w.u8(0);
                    w.bytes(&b.to_bytes());
                }
                Section::Params { tag, tensor } => {
                    w.u8(1);
                    w.str(tag);
                    w.u32(tensor.rows as u32);
                    w.u32(tensor.cols as u32);
                    w.u8(tensor.bits);
                    w.f32(tensor.scale);
                    let packed = pack_codes(&tensor.codes, tensor.bits);
                    w.u64(packed.len() as u64);
                    w.bytes(&packed);
                }
            }
        }
        Ok(w.finish())
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let bad = |detail: String| Error::format("program descriptor", detail);
        let mut offset = 0;
        let mut lines = Vec::new();
        loop {
            let end = data[offset..]
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| bad("unterminated header".into()))?;
            let line = std::str::from_utf8(&data[offset..offset + end])
                .map_err(|_| bad("header is not UTF-8".into()))?;
            offset += end + 1;
            if line == "end" {
                break;
            }
            lines.push(line);
        }
        if lines.first() != Some(&MAGIC_LINE) {
            return Err(bad("missing magic line".into()));
        }
        let (mut strategy, mut base, mut seed, mut nll_bits) = (None, None, None, None);
        let mut hyperparams = BTreeMap::new();
        for line in &lines[1..] {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("bad header line {line:?}")))?;
            match k {
                "strategy" => {
                    strategy = Some(
                        Strategy::from_name(v)
                            .ok_or_else(|| bad(format!("unknown strategy {v:?}")))?,
                    )
                }
                "base" => base = Some(v.to_string()),
                "seed" => seed = Some(v.parse().map_err(|_| bad(format!("bad seed {v:?}")))?),
                "nll_bits" => {
                    nll_bits = Some(v.parse().map_err(|_| bad(format!("bad nll_bits {v:?}")))?)
                }
                _ => match k.strip_prefix("hp.") {
                    Some(key) => {
                        hyperparams.insert(key.to_string(), v.to_string());
                    }
                    None => return Err(bad(format!("unknown header key {k:?}"))),
                },
            }
        }
        let mut r = ByteReader::new(&data[offset..], "program descriptor");
        let n = r.u32()? as usize;
        let mut sections = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            match r.u8()? {
                0 => {
                    let (bits, used) = BitString::from_bytes(r.remaining())?;
                    r.skip(used)?;
                    sections.push(Section::Bits(bits));
                }
                1 => {
                    let tag = r.str()?;
                    let rows = r.u32()? as usize;
                    let cols = r.u32()? as usize;
                    let bits = r.u8()?;
                    crate::toymodel::check_bits(bits)?;
                    let scale = r.f32()?;
                    let len = r.u64()? as usize;
                    let count = rows * cols;
                    if len != (count * bits as usize).div_ceil(8) {
                        return Err(bad(format!("block `{tag}` has the wrong byte length")));
                    }
                    let codes = unpack_codes(r.take(len)?, bits, count);
                    sections.push(Section::Params {
                        tag,
                        tensor: QuantizedTensor {
                            bits,
                            rows,
                            cols,
                            scale,
                            codes,
                        },
                    });
                }
                k => return Err(bad(format!("unknown section kind {k}"))),
            }
        }
        r.expect_end()?;
        Ok(Self {
            strategy: strategy.ok_or_else(|| bad("header lacks strategy".into()))?,
            base_hash: base.ok_or_else(|| bad("header lacks base".into()))?,
            seed: seed.ok_or_else(|| bad("header lacks seed".into()))?,
            hyperparams,
            sections,
            nll_bits,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
